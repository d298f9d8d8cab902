#include "doctest.h"

#include <random>

#include "stockout/choice_model.hpp"

using namespace stockout;

namespace {

ModelParams params_of(std::vector<double> w, double lambda = 1.0) {
  ModelParams p;
  p.lambda = lambda;
  p.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return p;
}

Assortment random_assortment(std::mt19937_64& rng, int catalog, bool with_null) {
  std::vector<ProductId> ids;
  std::bernoulli_distribution coin(0.6);
  for (int a = 0; a < catalog; ++a) {
    if (coin(rng)) ids.push_back(a);
  }
  if (ids.empty()) ids.push_back(0);
  return Assortment(ids, with_null);
}

}  // namespace

TEST_CASE("attraction probabilities") {
  const AttractionModel model;

  SUBCASE("single product with unit weight splits evenly with the null") {
    const ModelParams p = params_of({1.0});
    const Assortment a({0}, true);
    CHECK(model.choice_prob(p, Choice::product(0), a) == doctest::Approx(0.5));
    CHECK(model.choice_prob(p, Choice::null(), a) == doctest::Approx(0.5));
  }

  SUBCASE("five-product catalog without null: P_4 equals its weight") {
    const ModelParams p = params_of({0.25, 0.05, 0.1, 0.2, 0.4});
    const Assortment a({0, 1, 2, 3, 4}, false);
    CHECK(model.choice_prob(p, Choice::product(4), a) == doctest::Approx(0.4).epsilon(1e-12));
  }

  SUBCASE("two products with null") {
    const ModelParams p = params_of({0.0 + 1.0, 0.05, 0.1});
    const Assortment a({1, 2}, true);
    const double po = model.choice_prob(p, Choice::null(), a);
    CHECK(po == doctest::Approx(1.0 / 1.15).epsilon(1e-14));
    CHECK(po + model.choice_prob(p, Choice::product(1), a) + model.choice_prob(p, Choice::product(2), a) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("choice outside the set") {
    const ModelParams p = params_of({1.0, 1.0});
    CHECK_THROWS_AS(model.choice_prob(p, Choice::product(1), Assortment({0}, true)), DomainError);
    CHECK_THROWS_AS(model.choice_prob(p, Choice::null(), Assortment({0}, false)), DomainError);
  }
}

TEST_CASE("normalization and scale invariance over random instances") {
  const AttractionModel model;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> weight(0.01, 5.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    ModelParams p = params_of(std::vector<double>(6));
    for (int a = 0; a < 6; ++a) p.weights[a] = weight(rng);
    const bool with_null = trial % 2 == 0;
    const Assortment a = random_assortment(rng, 6, with_null);
    double sum = with_null ? model.choice_prob(p, Choice::null(), a) : 0.0;
    for (ProductId id : a.products) {
      const double pa = model.choice_prob(p, Choice::product(id), a);
      CHECK(pa >= 0.0);
      CHECK(pa <= 1.0);
      sum += pa;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);

    if (!with_null) {
      ModelParams scaled = p;
      scaled.weights *= scale(rng);
      for (ProductId id : a.products) {
        CHECK(std::abs(model.choice_prob(p, Choice::product(id), a) -
                       model.choice_prob(scaled, Choice::product(id), a)) < 1e-12);
      }
    }
  }
}

TEST_CASE("log-probability gradient") {
  const AttractionModel model;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> weight(0.05, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ModelParams p = params_of(std::vector<double>(5));
    for (int a = 0; a < 5; ++a) p.weights[a] = weight(rng);
    const Assortment a = random_assortment(rng, 5, trial % 3 != 0);
    std::vector<Choice> options;
    for (ProductId id : a.products) options.push_back(Choice::product(id));
    if (a.includes_null) options.push_back(Choice::null());

    Eigen::VectorXd expected_sum = Eigen::VectorXd::Zero(5);
    for (const Choice& c : options) {
      const Eigen::VectorXd g = model.log_choice_prob_gradient(p, c, a);
      expected_sum += model.choice_prob(p, c, a) * g;
      for (int b = 0; b < 5; ++b) {
        if (!a.contains(b)) {
          CHECK(g[b] == 0.0);
          continue;
        }
        const double h = 1e-6;
        ModelParams up = p;
        ModelParams down = p;
        up.weights[b] += h;
        down.weights[b] -= h;
        const double fd =
            (std::log(model.choice_prob(up, c, a)) - std::log(model.choice_prob(down, c, a))) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[b]) / std::max(1.0, std::abs(g[b])));
      }
    }
    // Sum over the choice set of P * grad log P is the gradient of 1.
    CHECK(expected_sum.cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("evaluator adapters agree with the model") {
  const AttractionModel model;
  const ModelParams p = params_of({0.3, 1.2, 0.7});
  const AttractionProbabilities<double> fast(p.weights, true);
  const GenericProbabilities slow(model, p, true);
  const ProductMask mask = product_bit(0) | product_bit(2);
  CHECK(fast.log_prob(2, mask) == doctest::Approx(slow.log_prob(2, mask)).epsilon(1e-14));
  CHECK(fast.log_null_prob(mask) == doctest::Approx(slow.log_null_prob(mask)).epsilon(1e-14));
  CHECK(fast.log_prob(1, mask) == kNegInf);
  const AttractionProbabilities<double> no_null(p.weights, false);
  CHECK(no_null.log_null_prob(mask) == kNegInf);
  CHECK(no_null.log_denominator(0) == kNegInf);
}
