#include "doctest.h"

#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "oracles.hpp"
#include "stockout/likelihood.hpp"
#include "stockout/simulator.hpp"

using namespace stockout;

namespace {

const AttractionModel kModel;

ModelParams params_of(std::vector<double> w, double lambda) {
  ModelParams p;
  p.lambda = lambda;
  p.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return p;
}

VisitContext context(std::vector<ProductId> ids, StockLevels stocks, bool with_null = true, double T = 1.0) {
  VisitContext c;
  c.horizon = T;
  c.assortment = Assortment(std::move(ids), with_null);
  c.stocks = std::move(stocks);
  return c;
}

SalesSummary summary(const VisitContext& ctx, std::map<ProductId, int> sales) {
  SalesSummary z;
  z.context = ctx;
  z.sales = std::move(sales);
  return z;
}

TransactionRecord record_of(const VisitContext& ctx, const std::vector<ProductId>& purchases) {
  TransactionRecord r;
  r.context = ctx;
  for (ProductId a : purchases) r.transactions.push_back({std::nullopt, a});
  return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Random small visit: up to three products, stocks 1..3, with the null.
struct Instance {
  VisitContext ctx;
  ModelParams params;
};

Instance random_instance(std::mt19937_64& rng, int products, bool with_null = true) {
  std::uniform_real_distribution<double> weight(0.2, 2.0);
  std::uniform_real_distribution<double> rate(0.5, 3.0);
  std::uniform_int_distribution<int> stock(1, 3);
  Instance in;
  std::vector<double> w(products);
  for (double& x : w) x = weight(rng);
  in.params = params_of(w, rate(rng));
  std::vector<ProductId> ids;
  StockLevels s;
  for (int a = 0; a < products; ++a) {
    ids.push_back(a);
    s[a] = stock(rng);
  }
  in.ctx = context(ids, s, with_null, 1.0);
  return in;
}

CompletePath simulate(const Instance& in, std::mt19937_64& rng) {
  return simulate_path(in.ctx, kModel, in.params, rng);
}

}  // namespace

TEST_CASE("L1 and L2") {
  const ModelParams p = params_of({1.0, 0.5}, 1.0);
  const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 2}});

  SUBCASE("empty path") {
    CompletePath path;
    path.context = ctx;
    CHECK(l1_complete(path, kModel, p) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(l2_choice_sequence(ctx, {}, kModel, p) == doctest::Approx(-1.0).epsilon(1e-14));
  }

  SUBCASE("one null arrival with P_o = 1/2") {
    const ModelParams single = params_of({1.0}, 1.0);
    CompletePath path;
    path.context = context({0}, {{0, 1}});
    path.events = {{0.4, Choice::null()}};
    CHECK(l1_complete(path, kModel, single) == doctest::Approx(std::log(std::exp(-1.0) * 0.5)).epsilon(1e-14));
  }

  SUBCASE("L1 - L2 = log(n! / T^n) on simulated paths") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
      Instance in = random_instance(rng, 3);
      in.ctx.horizon = 0.5 + trial % 3;
      const CompletePath path = simulate(in, rng);
      std::vector<Choice> seq;
      for (const Event& e : path.events) seq.push_back(e.choice);
      const double n = static_cast<double>(seq.size());
      const double gap = l1_complete(path, kModel, in.params) - l2_choice_sequence(in.ctx, seq, kModel, in.params);
      CHECK(gap == doctest::Approx(log_factorial(static_cast<int>(n)) - n * std::log(in.ctx.horizon)).epsilon(1e-10));
    }
  }

  SUBCASE("infeasible sequences") {
    const std::vector<Choice> twice{Choice::product(0), Choice::product(0)};
    CHECK(l2_choice_sequence(ctx, twice, kModel, p) == kNegInf);
    CompletePath path;
    path.context = ctx;
    path.events = {{0.2, Choice::product(0)}, {0.3, Choice::product(0)}};
    CHECK(l1_complete(path, kModel, p) == kNegInf);
  }

  SUBCASE("L2 sums to P[N <= 6] over all sequences") {
    const ModelParams q = params_of({0.7, 1.3}, 1.4);
    double total = 0.0;
    for (int n = 0; n <= 6; ++n) {
      oracle::for_each_sequence(ctx, q.weights, n, [&](const std::vector<Choice>& seq, double) {
        total += std::exp(l2_choice_sequence(ctx, seq, kModel, q));
      });
    }
    CHECK(std::abs(total - std::exp(log_truncation_mass(6, 1.0, 1.4))) < 1e-9);
  }
}

TEST_CASE("L3 with timestamps") {
  const ModelParams p = params_of({1.0, 0.5}, 2.0);

  SUBCASE("no transactions and no stock-out") {
    TransactionRecord r = record_of(context({0, 1}, {{0, 3}, {1, 3}}), {});
    r.timestamps_present = true;
    const double po = 1.0 / 2.5;
    CHECK(l3_transactions_timed(r, kModel, p) == doctest::Approx(-(1 - po) * 2.0).epsilon(1e-14));
  }

  SUBCASE("k = 0 equals the thinned Poisson density") {
    TransactionRecord r = record_of(context({0, 1}, {{0, 3}, {1, 3}}), {0, 1, 0});
    r.timestamps_present = true;
    r.transactions[0].time = 0.1;
    r.transactions[1].time = 0.5;
    r.transactions[2].time = 0.9;
    const double d = 2.5;
    const double expected = 3 * std::log(2.0) - (1 - 1 / d) * 2.0 + 2 * std::log(1.0 / d) + std::log(0.5 / d);
    CHECK(l3_transactions_timed(r, kModel, p) == doctest::Approx(expected).epsilon(1e-13));
  }

  SUBCASE("missing timestamps") {
    CHECK_THROWS_AS(l3_transactions_timed(record_of(context({0}, {{0, 1}}), {0}), kModel, p), DomainError);
  }

  SUBCASE("density integrates to one over every timed record") {
    // Two unit-stock products and a null: records are (), (a), (a, b) with
    // a != b. Gauss-Legendre integration over ordered times.
    const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 1}}, true, 1.5);
    using Quad = boost::math::quadrature::gauss<double, 30>;
    auto density = [&](std::vector<ProductId> items, std::vector<double> times) {
      TransactionRecord r = record_of(ctx, items);
      r.timestamps_present = true;
      for (std::size_t i = 0; i < times.size(); ++i) r.transactions[i].time = times[i];
      return std::exp(l3_transactions_timed(r, kModel, p));
    };
    double total = density({}, {});
    for (ProductId a : {0, 1}) {
      total += Quad::integrate([&](double t) { return density({a}, {t}); }, 0.0, ctx.horizon);
      const ProductId b = 1 - a;
      total += Quad::integrate(
          [&](double t1) {
            return Quad::integrate([&](double t2) { return density({a, b}, {t1, t2}); }, t1, ctx.horizon);
          },
          0.0, ctx.horizon);
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
  }

  SUBCASE("probability of no purchase against simulation") {
    const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 2}});
    TransactionRecord r = record_of(ctx, {});
    r.timestamps_present = true;
    const double expected = std::exp(l3_transactions_timed(r, kModel, p));
    std::mt19937_64 rng(4);
    const int runs = 200000;
    int empty = 0;
    for (int i = 0; i < runs; ++i) {
      const CompletePath path = simulate_path(ctx, kModel, p, rng);
      empty += project_transactions(path, true).transactions.empty() ? 1 : 0;
    }
    const double se = std::sqrt(expected * (1 - expected) / runs);
    CHECK(std::abs(empty / static_cast<double>(runs) - expected) < 3 * se);
  }
}

TEST_CASE("L4 summation representation") {
  SUBCASE("k = 0 converges to the thinning closed form") {
    const ModelParams p = params_of({0.6, 0.9}, 2.5);
    const TransactionRecord r = record_of(context({0, 1}, {{0, 9}, {1, 9}}), {0, 1, 1, 0});
    const double closed = l4_k0_closed_form(r, kModel, p);
    CHECK(rel(l4_transactions(r, kModel, p, TruncationPolicy::fixed(4 + 60)), closed) < 1e-10);
    const LogEstimate mc = l4_integral(r, kModel, p, 100, 1);
    CHECK(rel(mc.log_value, closed) < 1e-12);
    CHECK(mc.relative_se < 1e-12);
  }

  SUBCASE("normalization over every purchase list") {
    const ModelParams p = params_of({0.8, 1.2}, 1.0);
    const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 1}});
    double total = 0.0;
    for (const std::vector<ProductId>& list : std::vector<std::vector<ProductId>>{{}, {0}, {1}, {0, 1}, {1, 0}}) {
      total += std::exp(l4_transactions(record_of(ctx, list), kModel, p, TruncationPolicy::fixed(8)));
    }
    CHECK(std::abs(total - std::exp(log_truncation_mass(8, 1.0, 1.0))) < 1e-12);
  }

  SUBCASE("monotone in m") {
    const ModelParams p = params_of({0.8, 1.2}, 3.0);
    const TransactionRecord r = record_of(context({0, 1}, {{0, 1}, {1, 2}}), {1, 0, 1});
    double previous = kNegInf;
    for (int m = 3; m <= 20; ++m) {
      const double v = l4_transactions(r, kModel, p, TruncationPolicy::fixed(m));
      CHECK(v >= previous);
      previous = v;
    }
    CHECK_THROWS_AS(l4_transactions(r, kModel, p, TruncationPolicy::fixed(2)), DomainError);
  }

  SUBCASE("infeasible purchase list") {
    const ModelParams p = params_of({0.8, 1.2}, 1.0);
    const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 1}});
    CHECK(l4_transactions(record_of(ctx, {0, 0}), kModel, p, TruncationPolicy::fixed(6)) == kNegInf);
    CHECK(l4_lauricella(record_of(ctx, {0, 0}), kModel, p, TruncationPolicy::fixed(6)) == kNegInf);
  }

  SUBCASE("sequence-enumeration oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
      const Instance in = random_instance(rng, 2 + trial % 2);
      const int m = in.ctx.assortment.products.size() == 2 ? 7 : 6;
      const CompletePath path = simulate(in, rng);
      std::vector<ProductId> purchases;
      for (const Event& e : path.events) {
        if (!e.choice.is_null()) purchases.push_back(e.choice.product());
      }
      if (static_cast<int>(purchases.size()) > m) continue;
      const double expected = oracle::transaction_probability(in.ctx, in.params.weights, in.params.lambda, purchases, m);
      const double got = l4_transactions(record_of(in.ctx, purchases), kModel, in.params, TruncationPolicy::fixed(m));
      CHECK(rel(std::exp(got), expected) < 1e-10);
    }
  }
}

TEST_CASE("L4 representations agree") {
  SUBCASE("Lauricella series basics") {
    const std::vector<int> sizes{2, 1};
    const std::vector<double> zero{0.0, 0.0};
    CHECK(lauricella_log_mgf(sizes, zero, 10) == 0.0);
    // One segment: sum_t n~! / (n~ + t)! C(t + n~, t) theta^t = e^theta.
    const std::vector<int> one{3};
    const std::vector<double> theta{1.7};
    CHECK(rel(lauricella_log_mgf(one, theta, 80), 1.7) < 1e-12);
  }

  std::mt19937_64 rng(33);
  int checked = 0;
  for (int trial = 0; checked < 30 && trial < 1000; ++trial) {
    const Instance in = random_instance(rng, 2);
    const CompletePath path = simulate(in, rng);
    const TransactionRecord r = project_transactions(path, false);
    if (r.transactions.empty() || r.transactions.size() > 6) continue;
    ++checked;
    const TruncationPolicy trunc = TruncationPolicy::fixed(static_cast<int>(r.transactions.size()) + 40);
    const double sum = l4_transactions(r, kModel, in.params, trunc);
    CHECK(rel(l4_lauricella(r, kModel, in.params, trunc), sum) < 1e-8);
    if (checked <= 5) {
      const LogEstimate mc = l4_integral(r, kModel, in.params, 100000, static_cast<std::uint64_t>(trial));
      CHECK(std::abs(std::exp(mc.log_value - sum) - 1.0) < 3 * mc.relative_se + 1e-12);
    }
  }
  CHECK(checked == 30);
}

TEST_CASE("L5 sales with the null alternative") {
  SUBCASE("k = 0 converges to independent thinning") {
    const ModelParams p = params_of({0.6, 0.9, 0.3}, 2.0);
    const SalesSummary z = summary(context({0, 1, 2}, {{0, 5}, {1, 5}, {2, 5}}), {{0, 1}, {1, 2}, {2, 0}});
    const double closed = l5_k0_closed_form(z, kModel, p);
    CHECK(rel(l5_sales(z, kModel, p, TruncationPolicy::fixed(3 + 60)), closed) < 1e-10);
    CHECK(rel(l5_sales_attraction(z, p, TruncationPolicy::fixed(3 + 60)), closed) < 1e-10);
  }

  SUBCASE("normalization for s = (1, 1), T lambda = 1, m = 10") {
    const ModelParams p = params_of({0.8, 1.5}, 1.0);
    const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 1}});
    double generic = 0.0;
    double fast = 0.0;
    for (int a = 0; a <= 1; ++a) {
      for (int b = 0; b <= 1; ++b) {
        const SalesSummary z = summary(ctx, {{0, a}, {1, b}});
        generic += std::exp(l5_sales(z, kModel, p, TruncationPolicy::fixed(10)));
        fast += std::exp(l5_sales_attraction(z, p, TruncationPolicy::fixed(10)));
      }
    }
    CHECK(generic <= 1.0);
    CHECK(generic >= 1.0 - 1e-6);
    CHECK(std::abs(generic - std::exp(log_truncation_mass(10, 1.0, 1.0))) < 1e-12);
    CHECK(std::abs(fast - generic) < 1e-12);
  }

  SUBCASE("infeasible sales") {
    const ModelParams p = params_of({0.8, 1.5}, 1.0);
    const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 1}});
    const SalesSummary z = summary(ctx, {{0, 2}});
    CHECK(l5_sales(z, kModel, p, TruncationPolicy::fixed(10)) == kNegInf);
    CHECK(l5_sales_attraction(z, p, TruncationPolicy::fixed(10)) == kNegInf);
    CHECK_THROWS_AS(l5_sales(summary(ctx, {{0, 1}, {1, 1}}), kModel, p, TruncationPolicy::fixed(1)), DomainError);
  }

  SUBCASE("single product sold out matches sequence enumeration") {
    const ModelParams p = params_of({1.3}, 2.0);
    const VisitContext ctx = context({0}, {{0, 2}});
    const SalesSummary z = summary(ctx, {{0, 2}});
    const double expected = oracle::sales_probability(ctx, p.weights, 2.0, {{0, 2}}, 9);
    CHECK(rel(std::exp(l5_sales_attraction(z, p, TruncationPolicy::fixed(9))), expected) < 1e-12);
  }

  SUBCASE("sequence-enumeration oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
      const Instance in = random_instance(rng, 2 + trial % 2);
      const int m = in.ctx.assortment.products.size() == 2 ? 7 : 6;
      const SalesSummary z = project_sales(simulate(in, rng));
      if (z.total_sales() > m) continue;
      const double expected = oracle::sales_probability(in.ctx, in.params.weights, in.params.lambda, z.sales, m);
      CHECK(rel(std::exp(l5_sales(z, kModel, in.params, TruncationPolicy::fixed(m))), expected) < 1e-10);
      CHECK(rel(std::exp(l5_sales_attraction(z, in.params, TruncationPolicy::fixed(m))), expected) < 1e-10);
    }
  }

  SUBCASE("attraction recursion equals the generic sum") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
      const Instance in = random_instance(rng, 3);
      const SalesSummary z = project_sales(simulate(in, rng));
      const TruncationPolicy trunc = TruncationPolicy::fixed(std::max(12, z.total_sales()));
      CHECK(rel(l5_sales_attraction(z, in.params, trunc), l5_sales(z, kModel, in.params, trunc)) < 1e-8);
    }
  }

  SUBCASE("conditional truncation divides by P[N <= m]") {
    const ModelParams p = params_of({0.8, 1.5}, 2.0);
    const SalesSummary z = summary(context({0, 1}, {{0, 1}, {1, 2}}), {{0, 1}, {1, 1}});
    TruncationPolicy cond = TruncationPolicy::fixed(8);
    cond.conditional = true;
    CHECK(l5_sales_attraction(z, p, cond) ==
          doctest::Approx(l5_sales_attraction(z, p, TruncationPolicy::fixed(8)) - log_truncation_mass(8, 1.0, 2.0))
              .epsilon(1e-14));
  }

  SUBCASE("adaptive truncation is close to the long fixed sum") {
    const ModelParams p = params_of({0.8, 1.5}, 2.0);
    const SalesSummary z = summary(context({0, 1}, {{0, 1}, {1, 2}}), {{0, 1}, {1, 2}});
    CHECK(rel(l5_sales_attraction(z, p, TruncationPolicy{}), l5_sales_attraction(z, p, TruncationPolicy::fixed(80))) <
          1e-9);
  }
}

TEST_CASE("coarser observations carry at least as much mass") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(rng, 2);
    const CompletePath path = simulate(in, rng);
    std::vector<Choice> seq;
    for (const Event& e : path.events) seq.push_back(e.choice);
    const int m = std::max(10, static_cast<int>(seq.size()));
    const double l2 = l2_choice_sequence(in.ctx, seq, kModel, in.params);
    const double l4 = l4_transactions(project_transactions(path, false), kModel, in.params, TruncationPolicy::fixed(m));
    const double l5 = l5_sales(project_sales(path), kModel, in.params, TruncationPolicy::fixed(m));
    CHECK(l4 >= l2 - 1e-12);
    CHECK(l5 >= l4 - 1e-12);
  }
}

TEST_CASE("L6 sales without the null alternative") {
  SUBCASE("k = 0") {
    const ModelParams p = params_of({0.25, 0.75}, 3.0);
    const SalesSummary z = summary(context({0, 1}, {{0, 5}, {1, 5}}, false), {{0, 1}, {1, 2}});
    const double expected = log_poisson(3, 3.0, std::log(3.0)) + std::log(3.0) + std::log(0.25) + 2 * std::log(0.75);
    CHECK(l6_sales_no_null(z, kModel, p) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(l6_sales_no_null_attraction(z, p) == doctest::Approx(expected).epsilon(1e-13));
  }

  SUBCASE("choice part sums to one over sales with the same total") {
    const ModelParams p = params_of({0.3, 1.1, 0.6}, 1.0);
    const VisitContext ctx = context({0, 1, 2}, {{0, 2}, {1, 1}, {2, 3}}, false);
    for (int nt = 0; nt <= 6; ++nt) {
      double generic = 0.0;
      double fast = 0.0;
      for (int a = 0; a <= 2; ++a) {
        for (int b = 0; b <= 1; ++b) {
          const int c = nt - a - b;
          if (c < 0 || c > 3) continue;
          const SalesSummary z = summary(ctx, {{0, a}, {1, b}, {2, c}});
          generic += std::exp(l6_choice_part(z, kModel, p));
          fast += std::exp(l6_choice_part_attraction(z, AttractionProbabilities<double>(p.weights, false), 1.0));
        }
      }
      CHECK(std::abs(generic - 1.0) < 1e-9);
      CHECK(std::abs(fast - 1.0) < 1e-9);
    }
  }

  SUBCASE("the full likelihood sums to one with the discard rule") {
    const ModelParams p = params_of({0.3, 1.1}, 2.5);
    const VisitContext ctx = context({0, 1}, {{0, 2}, {1, 1}}, false);
    double total = 0.0;
    for (int a = 0; a <= 2; ++a) {
      for (int b = 0; b <= 1; ++b) total += std::exp(l6_sales_no_null(summary(ctx, {{0, a}, {1, b}}), kModel, p));
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }

  SUBCASE("choice part against sequence enumeration") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
      const Instance in = random_instance(rng, 3, false);
      const SalesSummary z = project_sales(simulate(in, rng));
      double expected = 0.0;
      oracle::for_each_sequence(in.ctx, in.params.weights, z.total_sales(), [&](const std::vector<Choice>& s, double pr) {
        if (oracle::sales_of(s) == [&] {
              std::map<ProductId, int> t;
              for (const auto& [a, n] : z.sales) {
                if (n > 0) t[a] = n;
              }
              return t;
            }()) {
          expected += pr;
        }
      });
      const double generic = l6_choice_part(z, kModel, in.params);
      CHECK(rel(std::exp(generic), expected) < 1e-10);
      CHECK(rel(l6_sales_no_null_attraction(z, in.params), l6_sales_no_null(z, kModel, in.params)) < 1e-8);
    }
  }

  SUBCASE("domain errors") {
    const ModelParams p = params_of({0.3, 1.1}, 1.0);
    const SalesSummary with_null = summary(context({0, 1}, {{0, 2}, {1, 1}}, true), {{0, 1}});
    CHECK_THROWS_AS(l6_sales_no_null(with_null, kModel, p), DomainError);
    CHECK_THROWS_AS(l6_sales_no_null_attraction(with_null, p), DomainError);
    const SalesSummary bad = summary(context({0, 1}, {{0, 2}, {1, 1}}, false), {{1, 2}});
    CHECK(l6_sales_no_null(bad, kModel, p) == kNegInf);
  }
}

TEST_CASE("SAA of the stock-out sum") {
  const ModelParams p = params_of({0.5, 0.9, 0.7}, 3.0);
  const VisitContext ctx = context({0, 1, 2}, {{0, 2}, {1, 1}, {2, 4}});
  const SalesSummary z = summary(ctx, {{0, 2}, {1, 1}, {2, 1}});
  const TruncationPolicy trunc = TruncationPolicy::fixed(14);
  const double exact = l5_sales_attraction(z, p, trunc);

  SUBCASE("exhaustive sampling is exact") {
    CHECK(rel(l5_saa(z, p, trunc, 1000000, 1), exact) < 1e-10);
  }

  SUBCASE("same seed, same value") { CHECK(l5_saa(z, p, trunc, 2, 77) == l5_saa(z, p, trunc, 2, 77)); }

  SUBCASE("unbiased and shrinking with more samples") {
    auto stats = [&](std::uint64_t samples) {
      double mean = 0.0;
      double m2 = 0.0;
      const int seeds = 200;
      for (int s = 0; s < seeds; ++s) {
        const double v = std::exp(l5_saa(z, p, trunc, samples, 1000 + s) - exact);
        const double d = v - mean;
        mean += d / (s + 1);
        m2 += d * (v - mean);
      }
      return std::pair{mean, m2 / (seeds - 1)};
    };
    const auto [mean1, var1] = stats(1);
    const auto [mean2, var2] = stats(2);
    CHECK(std::abs(mean1 - 1.0) < 3 * std::sqrt(var1 / 200));
    CHECK(std::abs(mean2 - 1.0) < 3 * std::sqrt(var2 / 200));
    CHECK(var2 / var1 < 0.7);
  }
}

TEST_CASE("gradients in (log lambda, log weights)") {
  // Each evaluator at AutoDiff scalars against central differences of the
  // double evaluation.
  std::mt19937_64 rng(12);
  double worst = 0.0;
  auto check = [&](const Eigen::VectorXd& x, const auto& f) {
    const int dim = static_cast<int>(x.size());
    AutoDiff lambda(std::exp(x[0]), dim, 0);
    lambda.derivatives() *= std::exp(x[0]);
    Vector<AutoDiff> w(dim - 1);
    for (int a = 0; a + 1 < dim; ++a) {
      w[a] = AutoDiff(std::exp(x[a + 1]), dim, a + 1);
      w[a].derivatives() *= std::exp(x[a + 1]);
    }
    const AutoDiff v = f(lambda, w);
    auto value = [&](const Eigen::VectorXd& y) {
      AutoDiff l(std::exp(y[0]), dim, 0);
      Vector<AutoDiff> u(dim - 1);
      for (int a = 0; a + 1 < dim; ++a) u[a] = AutoDiff(std::exp(y[a + 1]), dim, a + 1);
      return f(l, u).value();
    };
    for (int i = 0; i < dim; ++i) {
      const double h = 1e-5;
      Eigen::VectorXd up = x;
      Eigen::VectorXd down = x;
      up[i] += h;
      down[i] -= h;
      const double fd = (value(up) - value(down)) / (2 * h);
      worst = std::max(worst, std::abs(fd - v.derivatives()[i]) / std::max(1.0, std::abs(fd)));
    }
  };

  std::normal_distribution<double> normal(0.0, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    Instance in = random_instance(rng, 3);
    const CompletePath path = simulate(in, rng);
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = normal(rng);
    const SalesSummary z = project_sales(path);
    const TransactionRecord timed = project_transactions(path, true);
    const TransactionRecord untimed = project_transactions(path, false);
    const int m = std::max(12, z.total_sales());
    const SaaVisitPlan plan = make_saa_plan(z, m, 2, 5);

    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l1_complete(path, AttractionProbabilities<AutoDiff>(w, true), l);
    });
    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l3_transactions_timed(timed, AttractionProbabilities<AutoDiff>(w, true), l);
    });
    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l4_transactions(untimed, AttractionProbabilities<AutoDiff>(w, true), l, m);
    });
    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l5_sales(z, AttractionProbabilities<AutoDiff>(w, true), l, m);
    });
    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l5_sales_attraction(z, AttractionProbabilities<AutoDiff>(w, true), l, m);
    });
    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l5_saa(z, AttractionProbabilities<AutoDiff>(w, true), l, plan);
    });

    Instance no_null = random_instance(rng, 3, false);
    const SalesSummary z6 = project_sales(simulate(no_null, rng));
    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l6_sales_no_null_attraction(z6, AttractionProbabilities<AutoDiff>(w, false), l);
    });
    check(x, [&](const AutoDiff& l, const Vector<AutoDiff>& w) {
      return l6_sales_no_null(z6, AttractionProbabilities<AutoDiff>(w, false), l);
    });
  }
  CHECK(worst < 1e-4);
}
