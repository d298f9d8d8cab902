#include "doctest.h"

#include <random>

#include "stockout/model.hpp"
#include "stockout/simulator.hpp"

using namespace stockout;

namespace {

VisitContext context(std::vector<ProductId> ids, StockLevels stocks, bool with_null = true, double T = 1.0) {
  VisitContext c;
  c.horizon = T;
  c.assortment = Assortment(std::move(ids), with_null);
  c.stocks = std::move(stocks);
  return c;
}

CompletePath path_of(const VisitContext& ctx, std::vector<Choice> choices) {
  CompletePath p;
  p.context = ctx;
  double t = 0.0;
  for (const Choice& c : choices) {
    t += ctx.horizon / (choices.size() + 1.0);
    p.events.push_back({t, c});
  }
  return p;
}

VisitConfig small_config() {
  VisitConfig cfg;
  cfg.horizon = 1.0;
  cfg.params.lambda = 6.0;
  cfg.params.weights = Eigen::VectorXd::Constant(3, 0.5);
  cfg.catalog = {{0, 1.0, 2}, {1, 0.7, 1}, {2, 0.5, 3}};
  return cfg;
}

}  // namespace

TEST_CASE("assortment keeps products sorted and unique") {
  Assortment a({3, 1, 2}, true);
  CHECK(a.products == std::vector<ProductId>{1, 2, 3});
  CHECK(a.mask() == 0b1110);
  CHECK(a.offers(Choice::null()));
  CHECK_FALSE(Assortment({1}, false).offers(Choice::null()));
  CHECK_THROWS_AS(Assortment({1, 1}, true), DomainError);
}

TEST_CASE("validation of complete paths") {
  const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 2}});

  SUBCASE("empty path is valid") { CHECK(validate_complete_path(path_of(ctx, {})).ok()); }

  SUBCASE("second sale of a unit-stock product overruns at arrival 2") {
    const auto report = validate_complete_path(path_of(ctx, {Choice::product(0), Choice::product(0)}));
    REQUIRE(report.has(Violation::Kind::InventoryOverrun));
    for (const Violation& v : report.violations) CHECK(v.arrival == 2);
  }

  SUBCASE("choosing a product after its stock-out is unavailable") {
    const std::vector<Choice> seq{Choice::product(1), Choice::null(), Choice::product(1), Choice::product(1)};
    const auto report = validate_complete_path(path_of(ctx, seq));
    REQUIRE(report.has(Violation::Kind::UnavailableChoice));
    // Replay: product 1 leaves the assortment after its second sale.
    const Assortment after = assortment_after(ctx.assortment, ctx.stocks, std::span(seq).first(3));
    CHECK_FALSE(after.contains(1));
    CHECK(report.violations.front().arrival == 4);
  }

  SUBCASE("null without a null alternative") {
    const VisitContext no_null = context({0}, {{0, 2}}, false);
    CHECK(validate_complete_path(path_of(no_null, {Choice::null()})).has(Violation::Kind::NullUnavailable));
  }

  SUBCASE("time order and range") {
    CompletePath p = path_of(ctx, {Choice::null(), Choice::null()});
    p.events[1].time = 0.0;
    CHECK(validate_complete_path(p).has(Violation::Kind::TimeOrder));
    p.events[1].time = 1.5;
    CHECK(validate_complete_path(p).has(Violation::Kind::TimeRange));
  }
}

TEST_CASE("projections") {
  const VisitContext ctx = context({0, 1}, {{0, 1}, {1, 5}});

  SUBCASE("null then purchase") {
    CompletePath p;
    p.context = ctx;
    p.events = {{0.3, Choice::null()}, {0.5, Choice::product(0)}};
    const TransactionRecord r = project_transactions(p, true);
    REQUIRE(r.transactions.size() == 1);
    CHECK(r.transactions[0].product == 0);
    CHECK(*r.transactions[0].time == 0.5);
    CHECK_FALSE(project_transactions(p, false).transactions[0].time.has_value());
  }

  SUBCASE("all-null path") {
    const CompletePath p = path_of(ctx, {Choice::null(), Choice::null()});
    CHECK(project_transactions(p, false).transactions.empty());
    const SalesSummary s = project_sales(p);
    CHECK(s.total_sales() == 0);
    CHECK(s.stockout_count() == 0);
  }

  SUBCASE("exhausting a product counts as a stock-out") {
    const SalesSummary s = project_sales(path_of(ctx, {Choice::product(0), Choice::product(1)}));
    CHECK(s.sold(0) == 1);
    CHECK(s.stockout_count() == 1);
  }

  SUBCASE("invalid path rejected") {
    CHECK_THROWS_AS(project_sales(path_of(ctx, {Choice::product(0), Choice::product(0)})), DomainError);
  }
}

TEST_CASE("projection invariants over simulated paths") {
  const VisitConfig cfg = small_config();
  const auto paths = simulate_dataset(cfg, 10000, 11);
  for (const CompletePath& p : paths) {
    REQUIRE(validate_complete_path(p).ok());
    const SalesSummary s = project_sales(p);
    const TransactionRecord r = project_transactions(p, true);
    CHECK(s.total_sales() == static_cast<int>(r.transactions.size()));

    // Independent histogram of the choices.
    std::map<ProductId, int> hist;
    for (const Event& e : p.events) {
      if (!e.choice.is_null()) ++hist[e.choice.product()];
    }
    for (const auto& [a, n] : s.sales) {
      CHECK(n == hist[a]);
      CHECK(n <= p.context.stock_of(a));
    }
    // Filter order is kept.
    std::size_t i = 0;
    for (const Event& e : p.events) {
      if (!e.choice.is_null()) CHECK(r.transactions[i++].product == e.choice.product());
    }

    const SegmentDecomposition d = decompose_segments(p);
    CHECK(d.total_arrivals() == static_cast<int>(p.events.size()));
    CHECK(d.stockout_count() == s.stockout_count());
    auto stocked = s.stocked_out();
    auto order = d.stockout_order;
    std::sort(order.begin(), order.end());
    CHECK(order == stocked);
  }
}

TEST_CASE("context checks") {
  CHECK_NOTHROW(check_context(context({0}, {{0, 1}})));
  CHECK_THROWS_AS(check_context(context({0}, {})), DataError);
  CHECK_THROWS_AS(check_context(context({0}, {{0, 0}})), DataError);
  CHECK_THROWS_AS(check_context(context({0}, {{0, 1}}, true, 0.0)), DataError);
}
