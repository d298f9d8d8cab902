#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "stockout/model.hpp"

namespace stockout {

/// Exact non-negative integer; counts of stock-out vectors overflow 64 bits
/// quickly.
using BigCount = boost::multiprecision::cpp_int;

/// Arrival indices (1-based) at which each stocked-out product sells its last
/// unit, within a sequence of `arrivals` customers. products, stocks and
/// indices are parallel arrays.
struct StockoutVector {
  std::vector<ProductId> products;
  std::vector<int> stocks;
  std::vector<int> indices;
  int arrivals = 0;

  int size() const { return static_cast<int>(indices.size()); }
  friend bool operator==(const StockoutVector&, const StockoutVector&) = default;
};

/// Indices distinct, in [1, n], and each r_j >= s_j + sum of the stocks of
/// products exhausted before it.
bool is_feasible(const StockoutVector& v);

/// Number of feasible stock-out vectors for products with the given stocks
/// among n arrivals: (n+1)!/(n+1-h)! - n!/(n+1-h)! * sum(stocks), or 0 when
/// n < sum(stocks).
BigCount count_stockout_vectors(std::span<const int> stocks, int n);

/// Natural log of count_stockout_vectors; -inf when the count is zero.
double log_count_stockout_vectors(std::span<const int> stocks, int n);

/// Largest n^k the brute-force enumerator accepts.
inline constexpr std::uint64_t kEnumerationLimit = 10'000'000;

/// Visits every feasible vector by scanning all n^k index combinations.
/// Throws DomainError when n^k exceeds kEnumerationLimit.
void for_each_stockout_vector(std::span<const ProductId> products, std::span<const int> stocks, int n,
                              const std::function<void(const StockoutVector&)>& visit);

std::vector<StockoutVector> enumerate_stockout_vectors(std::span<const ProductId> products,
                                                       std::span<const int> stocks, int n);
/// Products are labelled 0..k-1.
std::vector<StockoutVector> enumerate_stockout_vectors(std::span<const int> stocks, int n);

/// Power-of-two modulus linear congruential generator with full period:
/// x' = (a x + c) mod 2^bits with a = 1 (mod 4) and c odd.
class FullPeriodLcg {
 public:
  FullPeriodLcg(unsigned bits, std::uint64_t multiplier, std::uint64_t increment, std::uint64_t state);

  std::uint64_t state() const { return state_; }
  std::uint64_t next();
  std::uint64_t modulus() const { return mask_ + 1; }

 private:
  std::uint64_t mask_;
  std::uint64_t multiplier_;
  std::uint64_t increment_;
  std::uint64_t state_;
};

struct SamplerStats {
  std::uint64_t raw_draws = 0;  // integers in [0, n^k) examined
  std::uint64_t accepted = 0;   // of which decoded to a feasible vector
};

/// Uniform sample without replacement of `sample_size` feasible vectors.
/// Integers in [0, n^k) are produced by a seeded full-period LCG over the
/// smallest power of two >= n^k (out-of-range states skipped); each integer is
/// decoded into k base-n digits plus one and kept when feasible. The walk
/// starts at a uniformly drawn feasible integer, so every feasible vector is
/// included with probability sample_size / count.
/// Throws DomainError when sample_size exceeds the feasible count.
std::vector<StockoutVector> sample_stockout_vectors(std::span<const ProductId> products,
                                                    std::span<const int> stocks, int n,
                                                    std::uint64_t sample_size, std::uint64_t seed,
                                                    SamplerStats* stats = nullptr);
std::vector<StockoutVector> sample_stockout_vectors(std::span<const int> stocks, int n,
                                                    std::uint64_t sample_size, std::uint64_t seed,
                                                    SamplerStats* stats = nullptr);

/// Stock-out order and segment sizes: n^[1] = r_(1) - 1,
/// n^[j] = r_(j) - r_(j-1) - 1, n^[k+1] = n - r_(k).
SegmentDecomposition to_segments(const StockoutVector& v);

/// Inverse of to_segments; `stocks` gives the stock of each product in
/// `segments.stockout_order`, `products` the label order of the result.
StockoutVector from_segments(const SegmentDecomposition& segments, std::span<const ProductId> products,
                             std::span<const int> stocks);

/// log[(sum counts)! / prod counts!] via log-gamma.
double log_multinomial(std::span<const int> counts);
double log_multinomial(std::initializer_list<int> counts);

/// Exact multinomial coefficient.
BigCount multinomial_exact(std::span<const int> counts);

}  // namespace stockout
