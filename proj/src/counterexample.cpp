#include "stockout/counterexample.hpp"

#include <bit>
#include <cstdint>
#include <vector>

#include "stockout/model.hpp"

namespace stockout {

namespace {

void require_inputs(int n_astar, int n_a, const Rational& p) {
  if (n_astar < 1 || n_a < 0) throw DomainError("need n_astar >= 1 and n_a >= 0");
  if (!(p > 0 && p < 1)) throw DomainError("p_astar must lie in (0, 1)");
}

Rational power(const Rational& base, int exponent) {
  Rational r = 1;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

/// C(n_astar - 1 + j, j) p^{n_astar} (1 - p)^j: the negative binomial weight
/// of j sales of a before the last unit of a*.
Rational nb_weight(int n_astar, int j, const Rational& p) {
  boost::multiprecision::cpp_int c = 1;
  for (int i = 1; i <= j; ++i) c = c * (n_astar - 1 + i) / i;
  return Rational(c) * power(p, n_astar) * power(1 - p, j);
}

}  // namespace

CounterexampleExpectations counterexample_expectations(int n_astar, int n_a, const Rational& p_astar) {
  require_inputs(n_astar, n_a, p_astar);
  const Rational p_a = 1 - p_astar;  // P_{a:{a,a*}}
  Rational total = 0;
  Rational correct = 0;
  Rational cm = 0;
  for (int j = 0; j <= n_a; ++j) {
    const Rational w = nb_weight(n_astar, j, p_astar);
    total += w;
    correct += j * w;
    // rho(j) = j P_a / (n_a - j (1 - P_a)); zero when j = 0.
    if (j > 0) cm += n_a * (j * p_a / (n_a - j * (1 - p_a))) * w;
  }
  return {correct / total, cm / total};
}

Rational counterexample_brute_force(int n_astar, int n_a, const Rational& p_astar) {
  require_inputs(n_astar, n_a, p_astar);
  const int n = n_astar + n_a;
  if (n > 30) throw DomainError("brute force limited to 30 sales");
  Rational mass = 0;
  Rational moment = 0;
  // Bit i set means arrival i + 1 bought a*.
  for (std::uint32_t bits = 0; bits < (std::uint32_t{1} << n); ++bits) {
    if (std::popcount(bits) != n_astar) continue;
    const int last = 31 - std::countl_zero(bits);
    const int before = last + 1 - n_astar;  // purchases of a before a* ran out
    const Rational w = power(p_astar, n_astar) * power(1 - p_astar, before);
    mass += w;
    moment += before * w;
  }
  return moment / mass;
}

}  // namespace stockout
