#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace stockout {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Largest number of free parameters a gradient carries (log lambda plus one
/// log-weight per product). Fixed capacity keeps AutoDiff off the heap.
inline constexpr int kMaxGradientSize = 64;

using GradientVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxGradientSize, 1>;
using AutoDiff = Eigen::AutoDiffScalar<GradientVector>;

inline double scalar_value(double x) { return x; }
inline double scalar_value(const AutoDiff& x) { return x.value(); }

/// Constant of the same scalar type as `like` (derivatives sized and zeroed).
inline double constant_like(double, double v) { return v; }
inline AutoDiff constant_like(const AutoDiff& like, double v) {
  return AutoDiff(v, GradientVector::Zero(like.derivatives().size()));
}

/// log(exp(a) + exp(b)), exact for -inf inputs.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a >= b) return a + std::log1p(std::exp(b - a));
  return b + std::log1p(std::exp(a - b));
}

inline AutoDiff log_add(const AutoDiff& a, const AutoDiff& b) {
  if (a.value() == kNegInf) return b;
  if (b.value() == kNegInf) return a;
  const bool a_top = a.value() >= b.value();
  const AutoDiff& hi = a_top ? a : b;
  const AutoDiff& lo = a_top ? b : a;
  const double e = std::exp(lo.value() - hi.value());
  return AutoDiff(hi.value() + std::log1p(e), (hi.derivatives() + e * lo.derivatives()) / (1.0 + e));
}

/// log(sum exp(x_i)) with a single max shift. Empty input gives -inf.
template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> terms) {
  using std::exp;
  using std::log;
  if (terms.empty()) return Scalar(kNegInf);
  std::size_t best = 0;
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (scalar_value(terms[i]) > scalar_value(terms[best])) best = i;
  }
  const Scalar top = terms[best];
  if (scalar_value(top) == kNegInf) return top;
  Scalar sum = constant_like(top, 0.0);
  for (const Scalar& t : terms) {
    if (scalar_value(t) != kNegInf) sum += exp(t - top);
  }
  return top + log(sum);
}

template <typename Scalar>
Scalar log_sum_exp(const std::vector<Scalar>& terms) {
  return log_sum_exp(std::span<const Scalar>(terms.data(), terms.size()));
}

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// log C(n, k); -inf outside 0 <= k <= n.
inline double log_binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// log of the Poisson pmf at n with mean `mean` (given also as its log).
template <typename Scalar>
Scalar log_poisson(int n, const Scalar& mean, const Scalar& log_mean) {
  return static_cast<double>(n) * log_mean - mean - log_factorial(n);
}

/// Smallest m with P[Poisson(mean) > m] < epsilon.
int poisson_upper_quantile(double mean, double epsilon);

/// log P[N <= m] and log P[N >= n] for N ~ Poisson(mean), with the value and
/// its derivative in `mean` (the AutoDiff overloads apply the chain rule).
struct LogWithSlope {
  double value;
  double slope;
};
LogWithSlope log_poisson_cdf_slope(int m, double mean);
LogWithSlope log_poisson_tail_slope(int n, double mean);

inline double log_poisson_cdf(int m, double mean) { return log_poisson_cdf_slope(m, mean).value; }
inline AutoDiff log_poisson_cdf(int m, const AutoDiff& mean) {
  const LogWithSlope r = log_poisson_cdf_slope(m, mean.value());
  return AutoDiff(r.value, mean.derivatives() * r.slope);
}
inline double log_poisson_tail(int n, double mean) { return log_poisson_tail_slope(n, mean).value; }
inline AutoDiff log_poisson_tail(int n, const AutoDiff& mean) {
  const LogWithSlope r = log_poisson_tail_slope(n, mean.value());
  return AutoDiff(r.value, mean.derivatives() * r.slope);
}

/// splitmix64 finalizer over (seed, salt): independent-looking sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Neumaier-compensated sum in index order.
double compensated_sum(std::span<const double> values);

}  // namespace stockout
