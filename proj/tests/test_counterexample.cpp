#include "doctest.h"

#include "stockout/counterexample.hpp"
#include "stockout/model.hpp"

using namespace stockout;

TEST_CASE("expectations for n_a* = n_a = 2, p = 1/2") {
  const Rational half(1, 2);
  const auto e = counterexample_expectations(2, 2, half);
  CHECK(e.correct == Rational(10, 11));
  CHECK(e.conlon_mortimer == Rational(26, 33));
  CHECK(counterexample_brute_force(2, 2, half) == Rational(10, 11));
}

TEST_CASE("no sales of a gives zero") {
  for (const Rational& p : {Rational(1, 3), Rational(1, 2), Rational(4, 5)}) {
    const auto e = counterexample_expectations(1, 0, p);
    CHECK(e.correct == 0);
    CHECK(e.conlon_mortimer == 0);
    CHECK(counterexample_brute_force(1, 0, p) == 0);
  }
}

TEST_CASE("correct expectation equals brute force") {
  for (int n_astar = 1; n_astar <= 4; ++n_astar) {
    for (int n_a = 0; n_a <= 5; ++n_a) {
      for (const Rational& p : {Rational(1, 5), Rational(1, 2), Rational(2, 3)}) {
        CHECK(counterexample_expectations(n_astar, n_a, p).correct ==
              counterexample_brute_force(n_astar, n_a, p));
      }
    }
  }
}

TEST_CASE("bad inputs") {
  CHECK_THROWS_AS(counterexample_expectations(0, 1, Rational(1, 2)), DomainError);
  CHECK_THROWS_AS(counterexample_expectations(1, 1, Rational(1)), DomainError);
}
