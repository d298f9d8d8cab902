#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "stockout/choice_model.hpp"
#include "stockout/combinatorics.hpp"
#include "stockout/model.hpp"
#include "stockout/numeric.hpp"

namespace stockout {

/// Where the infinite sums over total arrivals N are cut: N <= m.
struct TruncationPolicy {
  std::optional<int> fixed_m;
  double epsilon = 1e-10;
  /// Adaptive rule: smallest m with P[Poisson(T * lambda_cap) > m] < epsilon.
  /// Zero means "use 4x the rate being evaluated".
  double lambda_cap = 0.0;
  /// Divide by P[N <= m] (conditional likelihood) instead of reporting the
  /// joint truncated sum.
  bool conditional = false;

  static TruncationPolicy fixed(int m) { return TruncationPolicy{m}; }

  /// Throws DomainError when a fixed m is below the observed count.
  int resolve(int observed, double horizon, double fallback_rate) const;
};

/// A Monte Carlo estimate of a likelihood: log of the estimate and the
/// standard error relative to the estimate.
struct LogEstimate {
  double log_value = kNegInf;
  double relative_se = 0.0;
};

/// Purchases of a transaction record grouped into constant-assortment
/// segments. sizes[j] excludes the purchase that ends segment j.
struct TransactionSegments {
  bool feasible = true;
  std::vector<ProductMask> masks;     // assortment of segment j
  std::vector<int> sizes;             // purchases in segment j (n~^[j])
  std::vector<double> boundaries;     // k+2 times: 0, stock-out times, T
  std::vector<int> purchase_segment;  // segment of each purchase
  int stockouts() const { return static_cast<int>(sizes.size()) - 1; }
};

TransactionSegments segment_transactions(const TransactionRecord& record);

namespace detail {

/// h[S] = log sum over n_o in N^{k+1}, sum n_o = S, of
/// prod_j C(n_o^j + base_j, n_o^j) exp(n_o^j log_po_j), for S = 0..budget.
template <typename Scalar>
std::vector<Scalar> null_fill(std::span<const int> base, std::span<const Scalar> log_po, int budget,
                              const Scalar& like) {
  const Scalar neg_inf = constant_like(like, kNegInf);
  std::vector<Scalar> h(budget + 1, neg_inf);
  h[0] = constant_like(like, 0.0);
  for (std::size_t j = 0; j < base.size(); ++j) {
    if (scalar_value(log_po[j]) == kNegInf) continue;  // only n_o^j = 0 survives
    std::vector<Scalar> g(budget + 1);
    for (int t = 0; t <= budget; ++t) {
      g[t] = log_binomial(t + base[j], t) + static_cast<double>(t) * log_po[j];
    }
    std::vector<Scalar> next(budget + 1, neg_inf);
    for (int s = 0; s <= budget; ++s) {
      if (scalar_value(h[s]) == kNegInf) continue;
      for (int t = 0; s + t <= budget; ++t) next[s + t] = log_add(next[s + t], h[s] + g[t]);
    }
    h = std::move(next);
  }
  return h;
}

template <typename Scalar>
Scalar log_poisson_at(int n, const Scalar& mean, const Scalar& log_mean) {
  return log_poisson(n, mean, log_mean);
}

inline std::vector<ProductId> ids_of(ProductMask mask) {
  std::vector<ProductId> ids;
  for (ProductMask m = mask; m; m &= m - 1) ids.push_back(std::countr_zero(m));
  return ids;
}

/// Sales consistent with the context: every product offered, 0 <= n_a <= s_a.
bool sales_feasible(const SalesSummary& z);

}  // namespace detail

// ---------------------------------------------------------------------------
// Complete data

/// log[lambda^n e^{-T lambda} prod_i P_{a_i : A_i}]; -inf when infeasible.
template <ChoiceProbabilities P>
typename P::Scalar l1_complete(const CompletePath& path, const P& probs, const typename P::Scalar& lambda) {
  using Scalar = typename P::Scalar;
  using std::log;
  const VisitContext& ctx = path.context;
  ProductMask running = ctx.assortment.mask();
  std::map<ProductId, int> left = ctx.stocks;
  Scalar sum = constant_like(lambda, 0.0);
  double previous = 0.0;
  for (const Event& e : path.events) {
    if (e.time < previous || e.time < 0.0 || e.time > ctx.horizon) return constant_like(lambda, kNegInf);
    previous = e.time;
    if (e.choice.is_null()) {
      if (!probs.includes_null()) return constant_like(lambda, kNegInf);
      sum += probs.log_null_prob(running);
      continue;
    }
    const ProductId a = e.choice.product();
    if (!(running & product_bit(a))) return constant_like(lambda, kNegInf);
    sum += probs.log_prob(a, running);
    if (--left[a] == 0) running &= ~product_bit(a);
  }
  const double n = static_cast<double>(path.events.size());
  return sum + n * log(lambda) - ctx.horizon * lambda;
}

/// log[(T lambda)^n e^{-T lambda} / n! prod_i P]; the arrival times are not
/// used. -inf when the sequence is infeasible.
template <ChoiceProbabilities P>
typename P::Scalar l2_choice_sequence(const VisitContext& ctx, std::span<const Choice> choices, const P& probs,
                                      const typename P::Scalar& lambda) {
  using Scalar = typename P::Scalar;
  using std::log;
  ProductMask running = ctx.assortment.mask();
  std::map<ProductId, int> left = ctx.stocks;
  Scalar sum = constant_like(lambda, 0.0);
  for (const Choice& c : choices) {
    if (c.is_null()) {
      if (!probs.includes_null()) return constant_like(lambda, kNegInf);
      sum += probs.log_null_prob(running);
      continue;
    }
    const ProductId a = c.product();
    if (!(running & product_bit(a))) return constant_like(lambda, kNegInf);
    sum += probs.log_prob(a, running);
    if (--left[a] == 0) running &= ~product_bit(a);
  }
  const Scalar mean = ctx.horizon * lambda;
  return sum + log_poisson(static_cast<int>(choices.size()), mean, Scalar(log(mean)));
}

// ---------------------------------------------------------------------------
// Transactions

namespace detail {

template <ChoiceProbabilities P>
typename P::Scalar purchase_log_probs(const TransactionRecord& record, const TransactionSegments& seg,
                                      const P& probs, const typename P::Scalar& like) {
  typename P::Scalar sum = constant_like(like, 0.0);
  for (std::size_t i = 0; i < record.transactions.size(); ++i) {
    sum += probs.log_prob(record.transactions[i].product, seg.masks[seg.purchase_segment[i]]);
  }
  return sum;
}

}  // namespace detail

/// log[prod_i P(a~_i) lambda^n~ exp(-lambda sum_j (1 - P_o^[j]) t^[j])],
/// t^[j] the time spent in segment j. Throws DomainError without timestamps.
template <ChoiceProbabilities P>
typename P::Scalar l3_transactions_timed(const TransactionRecord& record, const P& probs,
                                         const typename P::Scalar& lambda) {
  using Scalar = typename P::Scalar;
  using std::exp;
  using std::log;
  if (!record.timestamps_present) throw DomainError("L3 needs transaction timestamps");
  const TransactionSegments seg = segment_transactions(record);
  if (!seg.feasible) return constant_like(lambda, kNegInf);
  Scalar exposure = constant_like(lambda, 0.0);
  for (int j = 0; j <= seg.stockouts(); ++j) {
    const double duration = seg.boundaries[j + 1] - seg.boundaries[j];
    const Scalar buy = probs.includes_null() ? Scalar(1.0 - exp(probs.log_null_prob(seg.masks[j])))
                                             : constant_like(lambda, seg.masks[j] ? 1.0 : 0.0);
    exposure += buy * duration;
  }
  const double n = static_cast<double>(record.transactions.size());
  return detail::purchase_log_probs(record, seg, probs, lambda) + n * log(lambda) - lambda * exposure;
}

/// Summation representation: sum over unobserved null counts n_o^[j] with
/// n~ + sum n_o <= m of Poisson(n~ + sum n_o) prod_j C(n_o^j + n~^j, n_o^j)
/// (P_o^[j])^{n_o^j}, times prod_i P(a~_i).
template <ChoiceProbabilities P>
typename P::Scalar l4_transactions(const TransactionRecord& record, const P& probs, const typename P::Scalar& lambda,
                                   int m) {
  using Scalar = typename P::Scalar;
  using std::log;
  const int nt = static_cast<int>(record.transactions.size());
  if (m < nt) throw DomainError("truncation m is below the number of transactions");
  const TransactionSegments seg = segment_transactions(record);
  if (!seg.feasible) return constant_like(lambda, kNegInf);
  std::vector<Scalar> log_po;
  for (ProductMask mask : seg.masks) log_po.push_back(probs.log_null_prob(mask));
  const std::vector<Scalar> fill = detail::null_fill<Scalar>(seg.sizes, log_po, m - nt, lambda);
  const Scalar mean = record.context.horizon * lambda;
  const Scalar log_mean = log(mean);
  std::vector<Scalar> terms;
  for (int s = 0; s <= m - nt; ++s) {
    if (scalar_value(fill[s]) == kNegInf) continue;
    terms.push_back(log_poisson(nt + s, mean, log_mean) + fill[s]);
  }
  return detail::purchase_log_probs(record, seg, probs, lambda) + log_sum_exp(terms);
}

/// k = 0 closed form: Poisson(n~; T lambda (1 - P_o)) prod_i P(a~_i) / (1 - P_o).
template <ChoiceProbabilities P>
typename P::Scalar l4_k0_closed_form(const TransactionRecord& record, const P& probs,
                                     const typename P::Scalar& lambda) {
  using Scalar = typename P::Scalar;
  using std::exp;
  using std::log;
  const TransactionSegments seg = segment_transactions(record);
  if (!seg.feasible) return constant_like(lambda, kNegInf);
  if (seg.stockouts() != 0) throw DomainError("closed form requires no stock-out");
  const int nt = static_cast<int>(record.transactions.size());
  const Scalar buy = 1.0 - exp(probs.log_null_prob(seg.masks[0]));
  const Scalar mean = record.context.horizon * lambda * buy;
  return log_poisson(nt, mean, Scalar(log(mean))) + detail::purchase_log_probs(record, seg, probs, lambda) -
         static_cast<double>(nt) * log(buy);
}

// ---------------------------------------------------------------------------
// Sales, generic choice model

namespace detail {

/// Sum over stock-out orderings, per-segment product splits and (through
/// `log_weight_of_fill`) null fills. `budget` bounds sum n_o. The result
/// excludes nothing: it is the full log sum.
template <ChoiceProbabilities P>
typename P::Scalar generic_sales_sum(const SalesSummary& z, const P& probs, int budget,
                                     std::span<const typename P::Scalar> log_arrival_weight,
                                     const typename P::Scalar& like) {
  using Scalar = typename P::Scalar;
  const Scalar neg_inf = constant_like(like, kNegInf);
  const std::vector<ProductId> stocked = z.stocked_out();
  const int k = static_cast<int>(stocked.size());
  const std::vector<ProductId>& all = z.context.assortment.products;
  const ProductMask full = z.context.assortment.mask();

  std::vector<Scalar> terms;
  std::vector<ProductId> order = stocked;  // sorted: next_permutation covers all k!
  do {
    // Segment masks and per-segment log probabilities.
    std::vector<ProductMask> masks(k + 1, full);
    for (int j = 1; j <= k; ++j) masks[j] = masks[j - 1] & ~product_bit(order[j - 1]);
    std::vector<std::map<ProductId, Scalar>> log_p(k + 1);
    std::vector<Scalar> log_po(k + 1);
    for (int j = 0; j <= k; ++j) {
      for (ProductId a : ids_of(masks[j])) log_p[j].emplace(a, probs.log_prob(a, masks[j]));
      log_po[j] = probs.log_null_prob(masks[j]);
    }
    Scalar fixed = constant_like(like, 0.0);
    for (int j = 0; j < k; ++j) fixed += log_p[j].at(order[j]);

    // Each product spreads its free units over the segments where it is
    // offered: all of them, or those up to its own stock-out.
    struct Slot {
      ProductId id;
      int units;
      int last_segment;
    };
    std::vector<Slot> slots;
    for (ProductId a : all) {
      const auto pos = std::find(order.begin(), order.end(), a);
      if (pos == order.end()) {
        slots.push_back({a, z.sold(a), k});
      } else {
        slots.push_back({a, z.sold(a) - 1, static_cast<int>(pos - order.begin())});
      }
    }
    std::map<std::vector<int>, Scalar> fill_cache;
    std::vector<int> seg_sizes(k + 1, 0);

    auto place = [&](auto&& self, std::size_t slot, Scalar acc) -> void {
      if (slot == slots.size()) {
        auto it = fill_cache.find(seg_sizes);
        if (it == fill_cache.end()) {
          const std::vector<Scalar> fill = null_fill<Scalar>(seg_sizes, log_po, budget, like);
          std::vector<Scalar> parts;
          for (int s = 0; s <= budget; ++s) {
            if (scalar_value(fill[s]) == kNegInf) continue;
            parts.push_back(log_arrival_weight[s] + fill[s]);
          }
          Scalar v = log_sum_exp(parts);
          for (int size : seg_sizes) v += log_factorial(size);
          it = fill_cache.emplace(seg_sizes, v).first;
        }
        terms.push_back(acc + it->second);
        return;
      }
      const Slot& s = slots[slot];
      // Compositions of s.units into segments 0..s.last_segment.
      std::vector<int> split(s.last_segment + 1, 0);
      auto spread = [&](auto&& rec, int segment, int remaining, Scalar partial) -> void {
        if (segment == s.last_segment) {
          split[segment] = remaining;
          Scalar v = partial - log_factorial(remaining);
          if (remaining > 0) v += static_cast<double>(remaining) * log_p[segment].at(s.id);
          seg_sizes[segment] += remaining;
          self(self, slot + 1, v);
          seg_sizes[segment] -= remaining;
          return;
        }
        for (int u = 0; u <= remaining; ++u) {
          split[segment] = u;
          Scalar v = partial - log_factorial(u);
          if (u > 0) v += static_cast<double>(u) * log_p[segment].at(s.id);
          seg_sizes[segment] += u;
          rec(rec, segment + 1, remaining - u, v);
          seg_sizes[segment] -= u;
        }
      };
      spread(spread, 0, s.units, acc);
    };
    place(place, 0, fixed);
  } while (std::next_permutation(order.begin(), order.end()));
  if (terms.empty()) return neg_inf;
  return log_sum_exp(terms);
}

}  // namespace detail

/// Truncated L5 for any choice model: sum over stock-out orders, segment
/// splits and null fills with total arrivals <= m.
template <ChoiceProbabilities P>
typename P::Scalar l5_sales(const SalesSummary& z, const P& probs, const typename P::Scalar& lambda, int m) {
  using Scalar = typename P::Scalar;
  using std::log;
  const int nt = z.total_sales();
  if (m < nt) throw DomainError("truncation m is below total sales");
  if (!detail::sales_feasible(z)) return constant_like(lambda, kNegInf);
  const Scalar mean = z.context.horizon * lambda;
  const Scalar log_mean = log(mean);
  std::vector<Scalar> weight;
  for (int s = 0; s <= m - nt; ++s) weight.push_back(log_poisson(nt + s, mean, log_mean));
  return detail::generic_sales_sum<P>(z, probs, m - nt, weight, lambda);
}

/// k = 0 closed form: prod_a Poisson(n_a; T lambda P_a).
template <ChoiceProbabilities P>
typename P::Scalar l5_k0_closed_form(const SalesSummary& z, const P& probs, const typename P::Scalar& lambda) {
  using Scalar = typename P::Scalar;
  using std::exp;
  using std::log;
  if (!detail::sales_feasible(z)) return constant_like(lambda, kNegInf);
  if (z.stockout_count() != 0) throw DomainError("closed form requires no stock-out");
  const ProductMask mask = z.context.assortment.mask();
  const Scalar log_mean = log(z.context.horizon * lambda);
  Scalar sum = constant_like(lambda, 0.0);
  for (ProductId a : z.context.assortment.products) {
    const Scalar lp = probs.log_prob(a, mask);
    const Scalar log_rate = log_mean + lp;
    sum += log_poisson(z.sold(a), Scalar(exp(log_rate)), log_rate);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Sales, attraction model

namespace detail {

/// Everything the stock-out dynamic programme needs about one visit.
struct StockoutLayout {
  std::vector<ProductId> stocked;  // k products with n_a = s_a
  std::vector<int> units;          // their sales
  std::vector<int> subset_units;   // total units of each subset of stocked
  ProductMask offered = 0;
  int stocked_total = 0;           // C
  double log_free_factorials = 0;  // sum over non-stocked products of log n_a!
};

StockoutLayout layout_of(const SalesSummary& z);

/// logq[S] = -log D(offered \ S) for every subset S of the stocked products.
template <typename Scalar>
std::vector<Scalar> subset_log_q(const StockoutLayout& L, const AttractionProbabilities<Scalar>& probs) {
  const int k = static_cast<int>(L.stocked.size());
  std::vector<Scalar> logq(std::size_t{1} << k);
  for (std::size_t S = 0; S < logq.size(); ++S) {
    ProductMask mask = L.offered;
    for (int b = 0; b < k; ++b) {
      if (S & (std::size_t{1} << b)) mask &= ~product_bit(L.stocked[b]);
    }
    logq[S] = -probs.log_denominator(mask);
  }
  return logq;
}

/// G[n], n = 0..n_max: log of the sum over stock-out positions and orders of
/// prod_j C(r_j - 1 - units before, s_j - 1) q(S_j)^{r_j - r_{j-1}} times
/// q(all)^{n - r_k}. Runs over subsets of the stocked set, O(2^k k n_max).
template <typename Scalar>
std::vector<Scalar> stockout_inner_sums(const StockoutLayout& L, const std::vector<Scalar>& logq, int n_max,
                                        const Scalar& like) {
  const int k = static_cast<int>(L.stocked.size());
  const std::size_t subsets = std::size_t{1} << k;
  const std::size_t full = subsets - 1;
  const Scalar neg_inf = constant_like(like, kNegInf);
  std::vector<std::vector<Scalar>> F(subsets, std::vector<Scalar>(n_max + 1, neg_inf));
  F[0][0] = constant_like(like, 0.0);
  std::vector<Scalar> H(n_max + 1, neg_inf);
  for (std::size_t S = 0; S < full; ++S) {
    const int before = L.subset_units[S];
    if (before > n_max) continue;
    H[0] = neg_inf;
    for (int r = 1; r <= n_max; ++r) H[r] = logq[S] + log_add(H[r - 1], F[S][r - 1]);
    for (int b = 0; b < k; ++b) {
      const std::size_t bit = std::size_t{1} << b;
      if (S & bit) continue;
      std::vector<Scalar>& target = F[S | bit];
      for (int r = before + L.units[b]; r <= n_max; ++r) {
        if (scalar_value(H[r]) == kNegInf) continue;
        target[r] = log_add(target[r], H[r] + log_binomial(r - 1 - before, L.units[b] - 1));
      }
    }
  }
  std::vector<Scalar> G(n_max + 1, neg_inf);
  const bool carry = std::isfinite(scalar_value(logq[full]));
  for (int n = 0; n <= n_max; ++n) {
    Scalar g = F[full][n];
    if (n > 0 && carry && scalar_value(G[n - 1]) != kNegInf) g = log_add(g, logq[full] + G[n - 1]);
    G[n] = g;
  }
  return G;
}

/// log of the number of ways to place non-stocked sales and nulls among the
/// n - C free positions: (n - C)! / (prod n_a! (n - n~)!).
inline double log_free_placements(const StockoutLayout& L, int n, int total_sales) {
  return log_factorial(n - L.stocked_total) - L.log_free_factorials - log_factorial(n - total_sales);
}

template <typename Scalar>
Scalar log_weight_products(const SalesSummary& z, const AttractionProbabilities<Scalar>& probs, const Scalar& like) {
  Scalar sum = constant_like(like, 0.0);
  for (const auto& [a, n] : z.sales) {
    if (n > 0) sum += static_cast<double>(n) * probs.log_weight(a);
  }
  return sum;
}

}  // namespace detail

/// L5 under the attraction model through the stock-out subset recursion; the
/// count of sequences includes the C(n - C, n - n~) placements of nulls.
template <typename Scalar>
Scalar l5_sales_attraction(const SalesSummary& z, const AttractionProbabilities<Scalar>& probs, const Scalar& lambda,
                           int m) {
  using std::log;
  const int nt = z.total_sales();
  if (m < nt) throw DomainError("truncation m is below total sales");
  if (!detail::sales_feasible(z)) return constant_like(lambda, kNegInf);
  if (!probs.includes_null()) throw DomainError("L5 needs the null alternative");
  const detail::StockoutLayout L = detail::layout_of(z);
  const std::vector<Scalar> logq = detail::subset_log_q(L, probs);
  const std::vector<Scalar> G = detail::stockout_inner_sums(L, logq, m, lambda);
  const Scalar mean = z.context.horizon * lambda;
  const Scalar log_mean = log(mean);
  std::vector<Scalar> terms;
  for (int n = nt; n <= m; ++n) {
    if (scalar_value(G[n]) == kNegInf) continue;
    terms.push_back(log_poisson(n, mean, log_mean) + detail::log_free_placements(L, n, nt) + G[n]);
  }
  if (terms.empty()) return constant_like(lambda, kNegInf);
  return log_sum_exp(terms) + detail::log_weight_products(z, probs, lambda);
}

// ---------------------------------------------------------------------------
// Sales without a null alternative

/// Arrival part of L6: log Poisson(n~; T lambda). When every offered product
/// stocked out, later arrivals leave no trace and the part is P[N >= n~].
template <typename Scalar>
Scalar l6_arrival_part(const SalesSummary& z, const Scalar& lambda) {
  using std::log;
  const int nt = z.total_sales();
  const Scalar mean = z.context.horizon * lambda;
  if (z.stockout_count() == static_cast<int>(z.context.assortment.products.size()) && nt > 0) {
    return log_poisson_tail(nt, mean);
  }
  return log_poisson(nt, mean, Scalar(log(mean)));
}

/// Choice part L6^(2): probability of the sales given N = n~, generic model.
template <ChoiceProbabilities P>
typename P::Scalar l6_choice_part(const SalesSummary& z, const P& probs, const typename P::Scalar& like) {
  using Scalar = typename P::Scalar;
  if (probs.includes_null()) throw DomainError("L6 is defined without the null alternative");
  if (!detail::sales_feasible(z)) return constant_like(like, kNegInf);
  const std::vector<Scalar> weight{constant_like(like, 0.0)};
  return detail::generic_sales_sum<P>(z, probs, 0, weight, like);
}

template <ChoiceProbabilities P>
typename P::Scalar l6_sales_no_null(const SalesSummary& z, const P& probs, const typename P::Scalar& lambda) {
  if (z.context.assortment.includes_null) throw DomainError("L6 needs a summary without the null alternative");
  return l6_arrival_part(z, lambda) + l6_choice_part(z, probs, lambda);
}

/// Attraction fast path of the choice part.
template <typename Scalar>
Scalar l6_choice_part_attraction(const SalesSummary& z, const AttractionProbabilities<Scalar>& probs,
                                 const Scalar& like) {
  if (probs.includes_null()) throw DomainError("L6 is defined without the null alternative");
  if (!detail::sales_feasible(z)) return constant_like(like, kNegInf);
  const int nt = z.total_sales();
  const detail::StockoutLayout L = detail::layout_of(z);
  const std::vector<Scalar> logq = detail::subset_log_q(L, probs);
  const std::vector<Scalar> G = detail::stockout_inner_sums(L, logq, nt, like);
  if (scalar_value(G[nt]) == kNegInf) return constant_like(like, kNegInf);
  return G[nt] + detail::log_free_placements(L, nt, nt) + detail::log_weight_products(z, probs, like);
}

template <typename Scalar>
Scalar l6_sales_no_null_attraction(const SalesSummary& z, const AttractionProbabilities<Scalar>& probs,
                                   const Scalar& lambda) {
  if (z.context.assortment.includes_null) throw DomainError("L6 needs a summary without the null alternative");
  return l6_arrival_part(z, lambda) + l6_choice_part_attraction(z, probs, lambda);
}

// ---------------------------------------------------------------------------
// Sample average approximation of the stock-out sum

/// One sampled stock-out vector, stored as the stocked-product indices in
/// stock-out order and their arrival positions.
struct SaaSample {
  std::vector<int> order;
  std::vector<int> positions;
};

/// Samples drawn once per visit and reused at every parameter value, so the
/// optimizer sees a deterministic surface.
struct SaaVisitPlan {
  int first_n = 0;
  std::vector<double> log_scale;               // log(count / sample size), per n
  std::vector<std::vector<SaaSample>> samples;  // per n
};

SaaVisitPlan make_saa_plan(const SalesSummary& z, int m, std::uint64_t samples_per_n, std::uint64_t seed);

/// L5 (attraction) with each n's stock-out sum replaced by count / size times
/// the sum over the sampled vectors.
template <typename Scalar>
Scalar l5_saa(const SalesSummary& z, const AttractionProbabilities<Scalar>& probs, const Scalar& lambda,
              const SaaVisitPlan& plan) {
  using std::log;
  if (!detail::sales_feasible(z)) return constant_like(lambda, kNegInf);
  const int nt = z.total_sales();
  const detail::StockoutLayout L = detail::layout_of(z);
  const std::vector<Scalar> logq = detail::subset_log_q(L, probs);
  const std::size_t full = logq.size() - 1;
  const Scalar mean = z.context.horizon * lambda;
  const Scalar log_mean = log(mean);
  std::vector<Scalar> terms;
  std::vector<Scalar> inner;
  for (std::size_t i = 0; i < plan.samples.size(); ++i) {
    const int n = plan.first_n + static_cast<int>(i);
    if (plan.samples[i].empty()) continue;
    inner.clear();
    for (const SaaSample& s : plan.samples[i]) {
      Scalar t = constant_like(lambda, 0.0);
      std::size_t S = 0;
      int before = 0;
      int previous = 0;
      for (std::size_t j = 0; j < s.order.size(); ++j) {
        const int b = s.order[j];
        const int r = s.positions[j];
        t += log_binomial(r - 1 - before, L.units[b] - 1) + static_cast<double>(r - previous) * logq[S];
        S |= std::size_t{1} << b;
        before += L.units[b];
        previous = r;
      }
      if (n > previous) t += static_cast<double>(n - previous) * logq[full];
      inner.push_back(t);
    }
    terms.push_back(log_poisson(n, mean, log_mean) + detail::log_free_placements(L, n, nt) + plan.log_scale[i] +
                    log_sum_exp(inner));
  }
  if (terms.empty()) return constant_like(lambda, kNegInf);
  return log_sum_exp(terms) + detail::log_weight_products(z, probs, lambda);
}

// ---------------------------------------------------------------------------
// Double-precision entry points on ModelParams.

double l1_complete(const CompletePath& path, const ChoiceModel& model, const ModelParams& params);
double l2_choice_sequence(const VisitContext& ctx, std::span<const Choice> choices, const ChoiceModel& model,
                          const ModelParams& params);
double l3_transactions_timed(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params);
double l4_transactions(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params,
                       const TruncationPolicy& trunc);
double l4_k0_closed_form(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params);

/// Integral representation: prod P Poisson(n~; T lambda) times a Monte Carlo
/// mean of exp(sum_j T lambda P_o^[j] q_j), q ~ Dirichlet(n~^[j] + 1).
LogEstimate l4_integral(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params,
                        std::size_t mc_samples, std::uint64_t seed);

/// log of the truncated confluent Lauricella series
/// sum_{n_o} n~! / (n~ + S)! prod_j C(n_o^j + n~^j, n_o^j) theta_j^{n_o^j},
/// S = sum n_o <= budget, n~ = sum n~^j + (segments - 1). Direct summation
/// over every vector n_o.
double lauricella_log_mgf(std::span<const int> segment_sizes, std::span<const double> theta, int budget);

/// L4 through the Lauricella series: prod P Poisson(n~; T lambda) F(T lambda P_o).
double l4_lauricella(const TransactionRecord& record, const ChoiceModel& model, const ModelParams& params,
                     const TruncationPolicy& trunc);

double l5_sales(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params,
                const TruncationPolicy& trunc);
double l5_k0_closed_form(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params);
double l5_sales_attraction(const SalesSummary& z, const ModelParams& params, const TruncationPolicy& trunc);
double l5_saa(const SalesSummary& z, const ModelParams& params, const TruncationPolicy& trunc,
              std::uint64_t samples_per_n, std::uint64_t seed);

double l6_sales_no_null(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params);
double l6_choice_part(const SalesSummary& z, const ChoiceModel& model, const ModelParams& params);
double l6_sales_no_null_attraction(const SalesSummary& z, const ModelParams& params);

/// log P[N <= m] for N ~ Poisson(T lambda): the denominator of the
/// conditional truncated likelihood.
double log_truncation_mass(int m, double horizon, double lambda);

}  // namespace stockout
