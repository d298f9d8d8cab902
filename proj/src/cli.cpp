#include "stockout/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stockout/counterexample.hpp"
#include "stockout/io.hpp"

namespace stockout {

namespace {

struct SimulateArgs {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> visits;
  std::string granularity;
};

struct EstimateArgs {
  std::string data;
  std::string kind;
  std::optional<int> truncation;
  std::optional<std::uint64_t> saa_samples;
  std::uint64_t seed = 0;
  bool naive = false;
  std::optional<int> hide_product;
  bool multi_start = false;
  std::string out;
};

struct CounterexampleArgs {
  int n_astar = 2;
  int n_a = 2;
  std::string p = "1/2";
};

struct CompareArgs {
  std::string data;
  std::string out;
  std::string config;
  std::string preset;
  std::vector<std::size_t> prefixes;
  std::uint64_t saa_samples = 1;
  std::uint64_t seed = 0;
  std::optional<int> truncation;
};

Granularity granularity_option(const std::string& name) {
  const auto g = parse_granularity(name);
  if (!g) throw DataError("unknown granularity \"" + name + "\"");
  return *g;
}

RunConfig config_from(const std::string& path, const std::string& preset) {
  if (!preset.empty()) return section7_run_config();
  return load_run_config(path);
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write " + path);
  write(file);
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig c = config_from(a.config, a.preset);
  if (a.seed) c.seed = *a.seed;
  if (a.visits) c.visits = *a.visits;
  if (!a.granularity.empty()) c.granularity = granularity_option(a.granularity);
  if (c.granularity == Granularity::Sales && !c.design.include_null) {
    throw DataError("granularity sales needs a null alternative; use sales-no-null");
  }
  if (c.granularity == Granularity::SalesNoNull && c.design.include_null) {
    throw DataError("granularity sales-no-null needs include_null = false");
  }
  const auto paths = simulate_dataset(c.design, c.visits, c.seed);
  const Dataset data = dataset_from_paths(paths, c.granularity);

  const bool to_stdout = a.out.empty() || a.out == "-";
  emit(a.out, out, [&](std::ostream& s) { write_dataset(s, data); });

  double arrivals = 0.0;
  std::size_t with_stockout = 0;
  for (const CompletePath& p : paths) {
    arrivals += static_cast<double>(p.events.size());
    std::map<ProductId, int> sold;
    for (const Event& e : p.events) {
      if (!e.choice.is_null()) ++sold[e.choice.product()];
    }
    const bool out_of_stock = std::any_of(sold.begin(), sold.end(), [&](const auto& kv) {
      return kv.second >= p.context.stock_of(kv.first);
    });
    if (out_of_stock) ++with_stockout;
  }
  const double n = static_cast<double>(std::max<std::size_t>(paths.size(), 1));
  std::ostream& summary = to_stdout ? err : out;
  summary << "visits " << paths.size() << "\n"
          << "mean_arrivals " << format_number(arrivals / n) << "\n"
          << "stockout_frequency " << format_number(static_cast<double>(with_stockout) / n) << "\n";
  return kExitOk;
}

EstimationOptions estimation_options(std::optional<int> truncation, bool multi_start) {
  EstimationOptions o;
  if (truncation) o.truncation = TruncationPolicy::fixed(*truncation);
  o.multi_start = multi_start;
  return o;
}

Json estimate_echo(const EstimateArgs& a, Granularity kind) {
  return {{"data", a.data},
          {"kind", granularity_name(kind)},
          {"truncation", a.truncation ? Json(*a.truncation) : Json(nullptr)},
          {"saa_samples", a.saa_samples ? Json(*a.saa_samples) : Json(nullptr)},
          {"seed", a.seed},
          {"naive", a.naive},
          {"hide_product", a.hide_product ? Json(*a.hide_product) : Json(nullptr)},
          {"multi_start", a.multi_start}};
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<Granularity> expected;
  if (!a.kind.empty()) expected = granularity_option(a.kind);
  Dataset data = read_dataset_file(a.data, expected);
  Granularity kind = data.granularity;
  if (a.hide_product) {
    data = hide_product(data, *a.hide_product);
    kind = Granularity::Sales;
  }
  EstimationOptions o = estimation_options(a.truncation, a.multi_start);
  if (a.saa_samples) o.saa = SaaConfig{*a.saa_samples, a.seed};

  FitResult r;
  if (a.naive) {
    if (a.saa_samples) throw DataError("--naive and --saa-samples are exclusive");
    r = fit_naive(data, o);
  } else {
    r = fit(data, kind, o);
  }
  const Json j = fit_result_to_json(r, estimate_echo(a, expected.value_or(data.granularity)));
  emit(a.out, out, [&](std::ostream& s) { s << j.dump(2) << '\n'; });
  if (!r.converged) {
    err << "warning: the optimizer did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_verify(const CounterexampleArgs& a, std::ostream& out, std::ostream& err) {
  Rational p;
  try {
    p = Rational(a.p);
  } catch (const std::runtime_error&) {
    err << "error: --p must be a rational such as 1/2\n";
    return kExitUsage;
  }
  const auto e = counterexample_expectations(a.n_astar, a.n_a, p);
  const Rational brute = counterexample_brute_force(a.n_astar, a.n_a, p);
  out << "E_correct = " << e.correct << "\n"
      << "E_cm = " << e.conlon_mortimer << "\n"
      << "brute_force = " << brute << "\n";
  if (e.correct == brute && e.correct != e.conlon_mortimer) {
    out << e.correct << " vs " << e.conlon_mortimer << ", mismatch confirmed\n";
    return kExitOk;
  }
  if (e.correct != brute) {
    out << "correct expectation disagrees with enumeration\n";
  } else {
    out << "no mismatch: both expectations equal " << e.correct << "\n";
  }
  return kExitData;
}

// One named parameter of a fit: "lambda", "P_<id>" or "P_null".
struct Row {
  std::string parameter;
  double estimate;
  double truth;
};

std::vector<Row> rows_of(const FitResult& r, const RunConfig& truth, const std::vector<ProductId>& catalog,
                         bool with_null) {
  double truth_null = 0.0;
  const auto ids = truth.design.catalog_ids();
  const auto p = design_probabilities(truth.design, &truth_null);
  auto truth_of = [&](ProductId id) {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw DataError("product " + std::to_string(id) + " is missing from the configuration");
    return p[static_cast<std::size_t>(it - ids.begin())];
  };
  std::vector<Row> rows{{"lambda", r.params.lambda, truth.design.params.lambda}};
  for (ProductId id : catalog) rows.push_back({"P_" + std::to_string(id), r.probability_of(id), truth_of(id)});
  if (with_null) rows.push_back({"P_null", r.null_probability, truth_null});
  return rows;
}

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset data = read_dataset_file(a.data);
  const RunConfig truth = config_from(a.config, a.preset);
  if (truth.design.include_null != data.includes_null()) {
    throw DataError("configuration and data disagree on the null alternative");
  }
  const std::vector<ProductId> catalog = data.catalog();
  const bool sales = data.granularity == Granularity::Sales || data.granularity == Granularity::SalesNoNull;

  // SAA needs a null; without one, the lowest always-offered unlimited
  // product plays that role.
  std::optional<ProductId> hidden;
  if (data.granularity == Granularity::SalesNoNull) {
    for (ProductId id : catalog) {
      bool always = true;
      for (const SalesSummary& z : data.sales) {
        always = always && z.context.assortment.contains(id) && z.context.stock_of(id) == kUnlimitedStock;
      }
      if (always) {
        hidden = id;
        break;
      }
    }
    if (!hidden) err << "note: no always-offered unlimited product, SAA skipped\n";
  }
  const bool saa = data.granularity == Granularity::Sales || hidden.has_value();

  std::vector<std::size_t> prefixes = a.prefixes;
  if (prefixes.empty()) prefixes.push_back(data.size());
  for (std::size_t n : prefixes) {
    if (n == 0 || n > data.size()) {
      throw DataError("prefix " + std::to_string(n) + " outside 1.." + std::to_string(data.size()));
    }
  }

  const EstimationOptions base = estimation_options(a.truncation, false);
  bool all_converged = true;
  std::ostringstream csv;
  csv << "prefix_size,estimator,parameter,estimate,truth\n";
  for (std::size_t n : prefixes) {
    const Dataset part = data.prefix(n);
    std::vector<FitResult> fits{fit(part, part.granularity, base)};
    if (sales) fits.push_back(fit_naive(part, base));
    if (saa) {
      EstimationOptions o = base;
      o.saa = SaaConfig{a.saa_samples, a.seed};
      fits.push_back(hidden ? fit(hide_product(part, *hidden), Granularity::Sales, o) : fit(part, Granularity::Sales, o));
    }
    for (const FitResult& r : fits) {
      all_converged = all_converged && r.converged;
      for (const Row& row : rows_of(r, truth, catalog, data.includes_null())) {
        csv << n << ',' << r.estimator << ',' << row.parameter << ',' << format_number(row.estimate) << ','
            << format_number(row.truth) << '\n';
      }
    }
  }
  emit(a.out, out, [&](std::ostream& s) { s << csv.str(); });
  if (!all_converged) {
    err << "warning: at least one fit did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Choice-model estimation under stock-outs"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate visits and write them as JSONL");
  auto* sim_source = simulate->add_option_group("source");
  sim_source->add_option("--config", sim.config, "JSON run configuration")->check(CLI::ExistingFile);
  sim_source->add_option("--preset", sim.preset, "Named configuration")->check(CLI::IsMember({"section7"}));
  sim_source->require_option(1);
  simulate->add_option("--out", sim.out, "Output file (default stdout)");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--visits", sim.visits, "Number of visits");
  simulate->add_option("--granularity", sim.granularity, "Observation level")
      ->check(CLI::IsMember({"complete", "transactions-timed", "transactions", "sales", "sales-no-null"}));

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Fit the model to a visit file");
  estimate->add_option("--data", est.data, "JSONL visit file")->required()->check(CLI::ExistingFile);
  estimate->add_option("--kind", est.kind, "Expected granularity of the file")
      ->check(CLI::IsMember({"complete", "transactions-timed", "transactions", "sales", "sales-no-null"}));
  estimate->add_option("--truncation", est.truncation, "Fixed truncation level m")->check(CLI::NonNegativeNumber);
  estimate->add_option("--saa-samples", est.saa_samples, "Stock-out vectors sampled per arrival count")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--seed", est.seed, "Seed for sampling");
  estimate->add_flag("--naive", est.naive, "Ignore stock-outs (baseline)");
  estimate->add_option("--hide-product", est.hide_product, "Treat an always-available product as the null");
  estimate->add_flag("--multi-start", est.multi_start, "Search three sub-brackets of lambda");
  estimate->add_option("--out", est.out, "Output JSON (default stdout)");

  CounterexampleArgs ce;
  auto* verify = app.add_subcommand("verify-counterexample", "Check the expected-sales counter-example exactly");
  verify->add_option("--n-astar", ce.n_astar, "Sales of the stocked-out product")->check(CLI::PositiveNumber);
  verify->add_option("--n-a", ce.n_a, "Sales of the other product")->check(CLI::NonNegativeNumber);
  verify->add_option("--p", ce.p, "Choice probability of the stocked-out product, as a rational");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Fit correct, naive and SAA estimators on growing prefixes");
  compare->add_option("--data", cmp.data, "JSONL visit file")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", cmp.out, "Output CSV (default stdout)");
  auto* cmp_source = compare->add_option_group("truth");
  cmp_source->add_option("--config", cmp.config, "Configuration holding the true parameters")
      ->check(CLI::ExistingFile);
  cmp_source->add_option("--preset", cmp.preset, "Named configuration")->check(CLI::IsMember({"section7"}));
  cmp_source->require_option(1);
  compare->add_option("--prefixes", cmp.prefixes, "Prefix sizes (default: whole file)")->delimiter(',');
  compare->add_option("--saa-samples", cmp.saa_samples, "Stock-out vectors per arrival count")
      ->check(CLI::PositiveNumber);
  compare->add_option("--seed", cmp.seed, "Seed for sampling");
  compare->add_option("--truncation", cmp.truncation, "Fixed truncation level m")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out, err);
    if (*estimate) return cmd_estimate(est, out, err);
    if (*verify) return cmd_verify(ce, out, err);
    return cmd_compare(cmp, out, err);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace stockout
