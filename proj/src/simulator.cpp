#include "stockout/simulator.hpp"

#include <algorithm>
#include <string>

#include "stockout/numeric.hpp"

namespace stockout {

void VisitConfig::validate() const {
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  if (!(params.lambda > 0.0)) throw DomainError("lambda must be positive");
  std::vector<ProductId> seen;
  for (const ProductSpec& p : catalog) {
    if (p.id < 0 || p.id >= kMaxProducts) throw DomainError("product id out of range");
    if (std::find(seen.begin(), seen.end(), p.id) != seen.end()) {
      throw DomainError("duplicate product " + std::to_string(p.id));
    }
    seen.push_back(p.id);
    if (!(p.offer_probability >= 0.0 && p.offer_probability <= 1.0)) {
      throw DomainError("offer probability must lie in [0, 1]");
    }
    if (p.stock < 1) throw DomainError("stock must be >= 1");
    if (p.id >= params.weights.size() || !(params.weights[p.id] > 0.0)) {
      throw DomainError("missing or non-positive weight for product " + std::to_string(p.id));
    }
  }
}

std::vector<ProductId> VisitConfig::catalog_ids() const {
  std::vector<ProductId> ids;
  for (const ProductSpec& p : catalog) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

VisitConfig section7_preset() {
  VisitConfig cfg;
  cfg.horizon = 1.0;
  cfg.include_null = false;
  cfg.params.lambda = 6.0;
  cfg.params.weights.resize(5);
  cfg.params.weights << 0.25, 0.05, 0.1, 0.2, 0.4;
  cfg.catalog.push_back({0, 1.0, kUnlimitedStock});
  for (ProductId a = 1; a <= 4; ++a) cfg.catalog.push_back({a, 0.6, 3});
  return cfg;
}

std::mt19937_64 visit_stream(std::uint64_t seed, std::uint64_t visit) {
  return std::mt19937_64(mix_seed(seed, visit));
}

VisitContext draw_visit_context(const VisitConfig& config, std::mt19937_64& rng) {
  VisitContext context;
  context.horizon = config.horizon;
  std::vector<ProductId> offered;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const ProductSpec& p : config.catalog) {
    bool on = p.offer_probability >= 1.0;
    if (!on && p.offer_probability > 0.0) on = unit(rng) < p.offer_probability;
    if (!on) continue;
    offered.push_back(p.id);
    context.stocks[p.id] = p.stock;
  }
  context.assortment = Assortment(std::move(offered), config.include_null);
  return context;
}

CompletePath simulate_path(const VisitContext& context, const ChoiceModel& model,
                           const ModelParams& params, std::mt19937_64& rng) {
  CompletePath path;
  path.context = context;
  const double mean = context.horizon * params.lambda;
  const int n = mean > 0.0 ? std::poisson_distribution<int>(mean)(rng) : 0;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> times(n);
  for (double& t : times) t = unit(rng) * context.horizon;
  std::sort(times.begin(), times.end());

  Assortment running = context.assortment;
  std::map<ProductId, int> left = context.stocks;
  std::vector<Choice> options;
  std::vector<double> cumulative;
  bool stale = true;
  for (double t : times) {
    if (stale) {
      options.clear();
      cumulative.clear();
      double total = 0.0;
      for (ProductId a : running.products) {
        options.push_back(Choice::product(a));
        total += model.choice_prob(params, options.back(), running);
        cumulative.push_back(total);
      }
      if (running.includes_null) {
        options.push_back(Choice::null());
        cumulative.push_back(1.0);
      }
      stale = false;
    }
    if (options.empty()) break;  // no null and nothing left to buy

    const double u = unit(rng) * cumulative.back();
    std::size_t pick = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    pick = std::min(pick, options.size() - 1);
    const Choice c = options[pick];
    path.events.push_back({t, c});
    if (c.is_null()) continue;
    int& s = left[c.product()];
    if (s != kUnlimitedStock && --s == 0) {
      running.products.erase(std::find(running.products.begin(), running.products.end(), c.product()));
      stale = true;
    }
  }
  return path;
}

CompletePath simulate_visit(const VisitConfig& config, std::mt19937_64& rng) {
  static const AttractionModel model;
  VisitContext context = draw_visit_context(config, rng);
  return simulate_path(context, model, config.params, rng);
}

std::vector<CompletePath> simulate_dataset(const VisitConfig& config, std::size_t visits,
                                           std::uint64_t seed) {
  config.validate();
  std::vector<CompletePath> out;
  out.reserve(visits);
  for (std::size_t v = 0; v < visits; ++v) {
    std::mt19937_64 rng = visit_stream(seed, v);
    out.push_back(simulate_visit(config, rng));
  }
  return out;
}

Assortment assortment_after(const Assortment& initial, const StockLevels& stocks,
                            std::span<const Choice> prefix) {
  std::map<ProductId, int> used;
  Assortment running = initial;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const Choice& c = prefix[i];
    if (!running.offers(c)) {
      throw DomainError("infeasible prefix at arrival " + std::to_string(i + 1));
    }
    if (c.is_null()) continue;
    const ProductId a = c.product();
    auto it = stocks.find(a);
    if (it == stocks.end()) throw DomainError("no stock level for product " + std::to_string(a));
    if (++used[a] == it->second) {
      running.products.erase(std::find(running.products.begin(), running.products.end(), a));
    }
  }
  return running;
}

}  // namespace stockout
