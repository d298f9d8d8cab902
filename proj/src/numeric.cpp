#include "stockout/numeric.hpp"

#include <boost/math/special_functions/gamma.hpp>

namespace stockout {

int poisson_upper_quantile(double mean, double epsilon) {
  if (mean <= 0.0) return 0;
  // P[N > m] for N ~ Poisson(mean) is the regularized lower gamma P(m+1, mean).
  int m = static_cast<int>(mean);
  while (boost::math::gamma_p(m + 1.0, mean) >= epsilon) ++m;
  return m;
}

LogWithSlope log_poisson_cdf_slope(int m, double mean) {
  if (m < 0) return {kNegInf, 0.0};
  if (mean <= 0.0) return {0.0, -1.0};
  // P[N <= m] = Q(m+1, mean); d/dmean = -pmf(m).
  const double cdf = boost::math::gamma_q(m + 1.0, mean);
  const double pmf = std::exp(log_poisson(m, mean, std::log(mean)));
  return {std::log(cdf), -pmf / cdf};
}

LogWithSlope log_poisson_tail_slope(int n, double mean) {
  if (n <= 0) return {0.0, 0.0};
  if (mean <= 0.0) return {kNegInf, 0.0};
  // P[N >= n] = P(n, mean); d/dmean = pmf(n-1).
  const double tail = boost::math::gamma_p(static_cast<double>(n), mean);
  const double pmf = std::exp(log_poisson(n - 1, mean, std::log(mean)));
  return {std::log(tail), pmf / tail};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(seed) ^ mix(salt + 0x632be59bd9b4e019ULL));
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

}  // namespace stockout
