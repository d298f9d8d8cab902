#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stockout/likelihood.hpp"
#include "stockout/model.hpp"
#include "stockout/optimize.hpp"

namespace stockout {

enum class Granularity { Complete, TransactionsTimed, Transactions, Sales, SalesNoNull };

std::string_view granularity_name(Granularity g);
/// Accepts complete, transactions-timed, transactions, sales, sales-no-null.
std::optional<Granularity> parse_granularity(std::string_view name);

/// Independent visits at one granularity. Only the vector matching
/// `granularity` is used.
struct Dataset {
  Granularity granularity = Granularity::Sales;
  std::vector<CompletePath> complete;
  std::vector<TransactionRecord> transactions;
  std::vector<SalesSummary> sales;
  /// Set by hide_product: the always-available product recast as the null.
  std::optional<ProductId> hidden_product;

  std::size_t size() const;
  /// Products offered in at least one visit, ascending.
  std::vector<ProductId> catalog() const;
  bool includes_null() const;
  double total_horizon() const;
  /// Throws DataError when a visit contradicts the granularity (null flag,
  /// timestamps) or its own context.
  void check() const;
  Dataset prefix(std::size_t visits) const;
};

/// Projects simulated paths to the requested granularity.
Dataset dataset_from_paths(const std::vector<CompletePath>& paths, Granularity granularity);

/// Drops the sales of `product` and treats it as the null alternative. The
/// product must be offered in every visit with unlimited stock.
Dataset hide_product(const Dataset& data, ProductId product);

struct SaaConfig {
  std::uint64_t samples_per_n = 1;
  std::uint64_t seed = 0;
};

struct EstimationOptions {
  TruncationPolicy truncation;
  /// Replace the exact stock-out sum of sales data by sampling.
  std::optional<SaaConfig> saa;
  /// Line search bracket on lambda, as multiples of the naive rate.
  double bracket_low = 0.2;
  double bracket_high = 5.0;
  /// Golden-section stop, in log lambda.
  double line_tolerance = 1e-3;
  /// Three golden-section runs on thirds of the bracket, best kept.
  bool multi_start = false;
  QuasiNewtonOptions quasi_newton;
};

struct FitResult {
  std::string estimator = "correct";
  Granularity granularity = Granularity::Sales;
  ModelParams params;
  std::vector<ProductId> products;
  std::vector<double> probabilities;  // on the full catalog, per products[i]
  bool includes_null = true;
  double null_probability = 0.0;
  std::optional<ProductId> hidden_product;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<SaaConfig> saa;

  /// Probability of a catalog product; the hidden product reads the null.
  double probability_of(ProductId id) const;
};

/// Sum of per-visit log-likelihoods in visit order (compensated).
double dataset_log_likelihood(const Dataset& data, Granularity kind, const ModelParams& params,
                              const EstimationOptions& options = {});

/// Classical likelihood that ignores stock-outs: each visit's initial
/// assortment is taken as faced by every customer.
double naive_log_likelihood(const Dataset& data, const ModelParams& params);

/// Starting point: log-weights from sales shares (floored at 1e-6) and
/// lambda = sales / (T (1 - P_o)).
ModelParams naive_start(const Dataset& data);

/// lambda = sum n / sum T; weights by BFGS on the choice part.
FitResult fit_complete(const Dataset& data, const EstimationOptions& options = {});

/// Maximum likelihood for the given kind: golden-section over lambda with
/// an inner BFGS on the weights, then a joint BFGS polish.
FitResult fit(const Dataset& data, Granularity kind, const EstimationOptions& options = {});

FitResult fit_naive(const Dataset& data, const EstimationOptions& options = {});

/// Probabilities of the full catalog (and null) under `params`.
std::vector<double> catalog_probabilities(const std::vector<ProductId>& catalog, const ModelParams& params,
                                          bool includes_null, double* null_probability = nullptr);

}  // namespace stockout
