#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace stockout {

using Rational = boost::multiprecision::cpp_rational;

/// Two products a* and a without a null alternative; a* sold out after
/// n_astar units, a sold n_a units and stayed available. p_astar is
/// P_{a*:{a,a*}}. Both values are E[N_a^[1]], the sales of a before the
/// stock-out of a*.
struct CounterexampleExpectations {
  Rational correct;          // truncated negative binomial mean
  Rational conlon_mortimer;  // binomial-thinning expectation
};

/// Throws DomainError unless n_astar >= 1, n_a >= 0 and 0 < p_astar < 1.
CounterexampleExpectations counterexample_expectations(int n_astar, int n_a, const Rational& p_astar);

/// E[N_a^[1]] by enumerating every arrangement of the sales, each weighted by
/// its sequence probability p*^{n_astar} (1 - p*)^{#a before the last a*}.
Rational counterexample_brute_force(int n_astar, int n_a, const Rational& p_astar);

}  // namespace stockout
