#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "stockout/estimation.hpp"
#include "stockout/simulator.hpp"

namespace stockout {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Visit files: JSONL, one visit per line.
//
//   {"T": 1.0, "assortment": [0, 2], "null": true, "stocks": {"0": 3, "2": null},
//    "granularity": "sales", "data": {"0": 1, "2": 4}}
//
// A null stock is unlimited. "data" holds events [{"t", "choice"}] for
// complete paths, [{"t"?, "product"}] for transactions, or a sales map.

Json visit_to_json(const Dataset& data, std::size_t visit);
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset_file(const std::string& path, const Dataset& data);

/// Throws DataError naming the offending line and field. With `expected`
/// set, every line must carry that granularity.
Dataset read_dataset(std::istream& in, std::optional<Granularity> expected = std::nullopt);
Dataset read_dataset_file(const std::string& path, std::optional<Granularity> expected = std::nullopt);

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  VisitConfig design;
  std::size_t visits = 1000;
  std::uint64_t seed = 1;
  Granularity granularity = Granularity::Sales;
  std::optional<int> truncation;
  std::optional<std::uint64_t> saa_samples;
};

/// The five-product experiment: 2000 visits of sales without a null.
RunConfig section7_run_config();

/// Schema: {"horizon", "lambda", "include_null", "products": [{"id",
/// "weight", "offer_probability", "stock"}], "visits", "seed",
/// "granularity", "truncation", "saa_samples"}. Only "lambda" and
/// "products" are required. Unknown fields are rejected.
RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const std::string& path);
Json run_config_to_json(const RunConfig& config);

/// Probabilities implied by the design on its full catalog (null last when
/// present).
std::vector<double> design_probabilities(const VisitConfig& design, double* null_probability = nullptr);

// ---------------------------------------------------------------------------
// Results

Json fit_result_to_json(const FitResult& result, const Json& config_echo);

/// Shortest decimal that reads back to the same double.
std::string format_number(double x);

}  // namespace stockout
