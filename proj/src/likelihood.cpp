#include "stockout/likelihood.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace stockout {

int TruncationPolicy::resolve(int observed, double horizon, double fallback_rate) const {
  if (fixed_m) {
    if (*fixed_m < observed) throw DomainError("truncation m is below the observed count");
    return *fixed_m;
  }
  const double cap = lambda_cap > 0.0 ? lambda_cap : 4.0 * fallback_rate;
  return std::max(observed, poisson_upper_quantile(horizon * cap, epsilon));
}

TransactionSegments segment_transactions(const TransactionRecord& record) {
  TransactionSegments seg;
  const VisitContext& ctx = record.context;
  ProductMask running = ctx.assortment.mask();
  std::map<ProductId, int> left = ctx.stocks;
  seg.masks.push_back(running);
  seg.sizes.push_back(0);
  seg.boundaries.push_back(0.0);
  double previous = 0.0;
  for (const Transaction& t : record.transactions) {
    if (!(running & product_bit(t.product))) {
      seg.feasible = false;
      return seg;
    }
    if (record.timestamps_present) {
      if (!t.time || *t.time < previous || *t.time > ctx.horizon) {
        seg.feasible = false;
        return seg;
      }
      previous = *t.time;
    }
    seg.purchase_segment.push_back(static_cast<int>(seg.sizes.size()) - 1);
    if (--left[t.product] == 0) {
      running &= ~product_bit(t.product);
      seg.masks.push_back(running);
      seg.sizes.push_back(0);
      seg.boundaries.push_back(record.timestamps_present ? *t.time : 0.0);
    } else {
      ++seg.sizes.back();
    }
  }
  seg.boundaries.push_back(ctx.horizon);
  return seg;
}

namespace detail {

bool sales_feasible(const SalesSummary& z) {
  for (const auto& [a, n] : z.sales) {
    if (n < 0) return false;
    if (n == 0) continue;
    if (!z.context.assortment.contains(a)) return false;
    if (n > z.context.stock_of(a)) return false;
  }
  return true;
}

StockoutLayout layout_of(const SalesSummary& z) {
  StockoutLayout L;
  L.stocked = z.stocked_out();
  L.offered = z.context.assortment.mask();
  for (ProductId a : L.stocked) L.units.push_back(z.sold(a));
  const std::size_t subsets = std::size_t{1} << L.stocked.size();
  L.subset_units.assign(subsets, 0);
  for (std::size_t S = 1; S < subsets; ++S) {
    const int low = std::countr_zero(S);
    L.subset_units[S] = L.subset_units[S & (S - 1)] + L.units[low];
  }
  L.stocked_total = L.subset_units[subsets - 1];
  for (ProductId a : z.context.assortment.products) {
    if (std::find(L.stocked.begin(), L.stocked.end(), a) == L.stocked.end()) {
      L.log_free_factorials += log_factorial(z.sold(a));
    }
  }
  return L;
}

}  // namespace detail

SaaVisitPlan make_saa_plan(const SalesSummary& z, int m, std::uint64_t samples_per_n, std::uint64_t seed) {
  const detail::StockoutLayout L = detail::layout_of(z);
  const int nt = z.total_sales();
  if (m < nt) throw DomainError("truncation m is below total sales");
  std::vector<ProductId> labels(L.stocked.size());
  std::iota(labels.begin(), labels.end(), 0);

  SaaVisitPlan plan;
  plan.first_n = nt;
  for (int n = nt; n <= m; ++n) {
    const BigCount count = count_stockout_vectors(L.units, n);
    std::vector<SaaSample> drawn;
    if (count == 0) {
      plan.log_scale.push_back(kNegInf);
      plan.samples.push_back(std::move(drawn));
      continue;
    }
    const std::uint64_t size =
        count < BigCount(samples_per_n) ? count.convert_to<std::uint64_t>() : samples_per_n;
    const auto vectors =
        sample_stockout_vectors(labels, L.units, n, size, mix_seed(seed, static_cast<std::uint64_t>(n)));
    for (const StockoutVector& v : vectors) {
      SaaSample s;
      s.order = v.products;
      std::sort(s.order.begin(), s.order.end(), [&](int a, int b) { return v.indices[a] < v.indices[b]; });
      for (int b : s.order) s.positions.push_back(v.indices[b]);
      drawn.push_back(std::move(s));
    }
    plan.log_scale.push_back(log_count_stockout_vectors(L.units, n) - std::log(static_cast<double>(size)));
    plan.samples.push_back(std::move(drawn));
  }
  return plan;
}

namespace {

GenericProbabilities generic(const ChoiceModel& model, const ModelParams& params, const VisitContext& ctx) {
  return GenericProbabilities(model, params, ctx.assortment.includes_null);
}

AttractionProbabilities<double> attraction(const ModelParams& params, const VisitContext& ctx) {
  return AttractionProbabilities<double>(params.weights, ctx.assortment.includes_null);
}

double conditioned(double value, const TruncationPolicy& trunc, int m, const VisitContext& ctx, double lambda) {
  if (!trunc.conditional || value == kNegInf) return value;
  return value - log_truncation_mass(m, ctx.horizon, lambda);
}

/// log Poisson(n~; T lambda) + sum_i log P(a~_i): the part of L4 outside the
/// null-fill series.
double l4_prefix(const TransactionRecord& record, const TransactionSegments& seg, const GenericProbabilities& probs,
                 double lambda) {
  const double mean = record.context.horizon * lambda;
  const int nt = static_cast<int>(record.transactions.size());
  return log_poisson(nt, mean, std::log(mean)) + detail::purchase_log_probs(record, seg, probs, lambda);
}

}  // namespace

double l1_complete(const CompletePath& path, const ChoiceModel& model, const ModelParams& params) {
  return l1_complete(path, generic(model, params, path.context), params.lambda);
}

double l2_choice_sequence(const VisitContext& ctx, std::span<const Choice> choices, const ChoiceModel& model,
                          const ModelParams& params) {
  return l2_choice_sequence(ctx, choices, generic(model, params, ctx), params.lambda);
}

double l3_transactions_timed(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params) {
  return l3_transactions_timed(record, generic(model, params, record.context), params.lambda);
}

double l4_transactions(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params,
                       const TruncationPolicy& trunc) {
  const int nt = static_cast<int>(record.transactions.size());
  const int m = trunc.resolve(nt, record.context.horizon, params.lambda);
  const double v = l4_transactions(record, generic(model, params, record.context), params.lambda, m);
  return conditioned(v, trunc, m, record.context, params.lambda);
}

double l4_k0_closed_form(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params) {
  return l4_k0_closed_form(record, generic(model, params, record.context), params.lambda);
}

LogEstimate l4_integral(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params,
                        std::size_t mc_samples, std::uint64_t seed) {
  const TransactionSegments seg = segment_transactions(record);
  if (!seg.feasible) return {};
  if (mc_samples == 0) throw DomainError("need at least one Monte Carlo sample");
  const GenericProbabilities probs = generic(model, params, record.context);
  const double prefix = l4_prefix(record, seg, probs, params.lambda);
  const double scale = record.context.horizon * params.lambda;

  const std::size_t parts = seg.sizes.size();
  std::vector<double> theta(parts);
  for (std::size_t j = 0; j < parts; ++j) theta[j] = scale * std::exp(probs.log_null_prob(seg.masks[j]));
  const double shift = *std::max_element(theta.begin(), theta.end());

  std::mt19937_64 rng(seed);
  std::vector<std::gamma_distribution<double>> gammas;
  for (int size : seg.sizes) gammas.emplace_back(size + 1.0, 1.0);
  std::vector<double> g(parts);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < mc_samples; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < parts; ++j) total += g[j] = gammas[j](rng);
    double x = 0.0;
    for (std::size_t j = 0; j < parts; ++j) x += theta[j] * g[j] / total;
    const double y = std::exp(x - shift);
    // Welford running moments.
    const double delta = y - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (y - mean);
  }
  const double n = static_cast<double>(mc_samples);
  const double se = mc_samples > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  return {prefix + shift + std::log(mean), se / mean};
}

double lauricella_log_mgf(std::span<const int> segment_sizes, std::span<const double> theta, int budget) {
  if (segment_sizes.size() != theta.size() || segment_sizes.empty()) {
    throw DomainError("segment sizes and coefficients must align");
  }
  const int parts = static_cast<int>(segment_sizes.size());
  const int nt = std::accumulate(segment_sizes.begin(), segment_sizes.end(), 0) + parts - 1;
  std::vector<double> log_theta(parts);
  for (int j = 0; j < parts; ++j) {
    if (theta[j] < 0.0) throw DomainError("coefficients must be non-negative");
    log_theta[j] = theta[j] > 0.0 ? std::log(theta[j]) : kNegInf;
  }
  std::vector<double> terms;
  std::vector<int> n_o(parts, 0);
  auto walk = [&](auto&& self, int j, int used, double acc) -> void {
    if (j == parts) {
      terms.push_back(acc + log_factorial(nt) - log_factorial(nt + used));
      return;
    }
    for (int t = 0; used + t <= budget; ++t) {
      if (t > 0 && log_theta[j] == kNegInf) break;
      const double v = t == 0 ? 0.0 : log_binomial(t + segment_sizes[j], t) + t * log_theta[j];
      self(self, j + 1, used + t, acc + v);
    }
  };
  walk(walk, 0, 0, 0.0);
  return log_sum_exp(terms);
}

double l4_lauricella(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params,
                     const TruncationPolicy& trunc) {
  const int nt = static_cast<int>(record.transactions.size());
  const int m = trunc.resolve(nt, record.context.horizon, params.lambda);
  const TransactionSegments seg = segment_transactions(record);
  if (!seg.feasible) return kNegInf;
  const GenericProbabilities probs = generic(model, params, record.context);
  const double scale = record.context.horizon * params.lambda;
  std::vector<double> theta;
  for (ProductMask mask : seg.masks) theta.push_back(scale * std::exp(probs.log_null_prob(mask)));
  const double v = l4_prefix(record, seg, probs, params.lambda) + lauricella_log_mgf(seg.sizes, theta, m - nt);
  return conditioned(v, trunc, m, record.context, params.lambda);
}

double l5_sales(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params,
                const TruncationPolicy& trunc) {
  const int m = trunc.resolve(z.total_sales(), z.context.horizon, params.lambda);
  const double v = l5_sales(z, generic(model, params, z.context), params.lambda, m);
  return conditioned(v, trunc, m, z.context, params.lambda);
}

double l5_k0_closed_form(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params) {
  return l5_k0_closed_form(z, generic(model, params, z.context), params.lambda);
}

double l5_sales_attraction(const SalesSummary& z, const ModelParams& params, const TruncationPolicy& trunc) {
  const int m = trunc.resolve(z.total_sales(), z.context.horizon, params.lambda);
  const double v = l5_sales_attraction(z, attraction(params, z.context), params.lambda, m);
  return conditioned(v, trunc, m, z.context, params.lambda);
}

double l5_saa(const SalesSummary& z, const ModelParams& params, const TruncationPolicy& trunc,
              std::uint64_t samples_per_n, std::uint64_t seed) {
  const int m = trunc.resolve(z.total_sales(), z.context.horizon, params.lambda);
  const SaaVisitPlan plan = make_saa_plan(z, m, samples_per_n, seed);
  const double v = l5_saa(z, attraction(params, z.context), params.lambda, plan);
  return conditioned(v, trunc, m, z.context, params.lambda);
}

double l6_sales_no_null(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params) {
  return l6_sales_no_null(z, generic(model, params, z.context), params.lambda);
}

double l6_choice_part(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params) {
  return l6_choice_part(z, generic(model, params, z.context), params.lambda);
}

double l6_sales_no_null_attraction(const SalesSummary& z, const ModelParams& params) {
  return l6_sales_no_null_attraction(z, attraction(params, z.context), params.lambda);
}

double log_truncation_mass(int m, double horizon, double lambda) {
  return log_poisson_cdf(m, horizon * lambda);
}

}  // namespace stockout
