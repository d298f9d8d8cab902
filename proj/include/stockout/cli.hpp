#pragma once

#include <iosfwd>

namespace stockout {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNotConverged = 3 };

/// Entry point of the `stockout` tool. Subcommands: simulate, estimate,
/// verify-counterexample, compare. Normal output goes to `out`, diagnostics
/// to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stockout
