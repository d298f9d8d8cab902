#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "stockout/choice_model.hpp"
#include "stockout/model.hpp"

namespace stockout {

struct ProductSpec {
  ProductId id = 0;
  double offer_probability = 1.0;
  int stock = kUnlimitedStock;
};

/// Experiment design for one visit: which products may be offered, with what
/// stock, under which parameters.
struct VisitConfig {
  double horizon = 1.0;
  std::vector<ProductSpec> catalog;
  ModelParams params;
  bool include_null = true;

  /// Throws DomainError on a bad offer probability, stock or weight.
  void validate() const;
  std::vector<ProductId> catalog_ids() const;
};

/// Five products, no null alternative, lambda = 6 per visit of length 1.
/// Product 0 (weight 0.25) is always offered with unlimited stock; products
/// 1..4 (weights 0.05, 0.1, 0.2, 0.4) are each offered with probability 0.6
/// and stock 3.
VisitConfig section7_preset();

/// Per-visit generator: the master seed and visit index are mixed with
/// splitmix64, so visit i is reproducible on its own.
std::mt19937_64 visit_stream(std::uint64_t seed, std::uint64_t visit);

/// Draws the offered assortment (one Bernoulli per optional product, in
/// catalog order) and attaches stocks.
VisitContext draw_visit_context(const VisitConfig& config, std::mt19937_64& rng);

/// N ~ Poisson(T lambda), sorted uniform times, sequential choices from the
/// running assortment. Without a null alternative, arrivals after every
/// product has stocked out are dropped.
CompletePath simulate_path(const VisitContext& context, const ChoiceModel& model,
                           const ModelParams& params, std::mt19937_64& rng);

CompletePath simulate_visit(const VisitConfig& config, std::mt19937_64& rng);

std::vector<CompletePath> simulate_dataset(const VisitConfig& config, std::size_t visits,
                                           std::uint64_t seed);

/// Products of `initial` whose count in `prefix` is still below stock.
/// Throws DomainError when the prefix is infeasible.
Assortment assortment_after(const Assortment& initial, const StockLevels& stocks,
                            std::span<const Choice> prefix);

}  // namespace stockout
