#include "stockout/combinatorics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "stockout/numeric.hpp"

namespace stockout {

namespace {

std::vector<ProductId> default_labels(std::size_t k) {
  std::vector<ProductId> ids(k);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

void require_parallel(std::span<const ProductId> products, std::span<const int> stocks) {
  if (products.size() != stocks.size()) throw DomainError("products and stocks differ in length");
  for (int s : stocks) {
    if (s < 1) throw DomainError("stocks must be >= 1");
  }
}

/// n^k, or 0 if it does not fit in 63 bits.
std::uint64_t checked_power(int n, std::size_t k) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < k; ++i) {
    if (n != 0 && total > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(n)) return 0;
    total *= static_cast<std::uint64_t>(n);
  }
  return total;
}

void decode(std::uint64_t x, int n, std::vector<int>& indices) {
  for (int& r : indices) {
    r = static_cast<int>(x % static_cast<std::uint64_t>(n)) + 1;
    x /= static_cast<std::uint64_t>(n);
  }
}

}  // namespace

bool is_feasible(const StockoutVector& v) {
  const int k = v.size();
  if (v.stocks.size() != v.indices.size()) return false;
  for (int j = 0; j < k; ++j) {
    const int r = v.indices[j];
    if (r < 1 || r > v.arrivals) return false;
    int needed = v.stocks[j];
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      if (v.indices[i] == r) return false;
      if (v.indices[i] < r) needed += v.stocks[i];
    }
    if (r < needed) return false;
  }
  return true;
}

BigCount count_stockout_vectors(std::span<const int> stocks, int n) {
  const int h = static_cast<int>(stocks.size());
  const long long total = std::accumulate(stocks.begin(), stocks.end(), 0LL);
  if (n < 0 || n < total) return 0;
  if (h == 0) return 1;
  // (n+1)!/(n+1-h)! = (n+1) n ... (n+2-h) and n!/(n+1-h)! = n ... (n+2-h).
  BigCount tail = 1;
  for (int i = n + 2 - h; i <= n; ++i) tail *= i;
  return tail * (n + 1) - tail * total;
}

double log_count_stockout_vectors(std::span<const int> stocks, int n) {
  const BigCount c = count_stockout_vectors(stocks, n);
  if (c == 0) return kNegInf;
  // Counts beyond double range are not expected; fall back to bit length.
  const std::size_t bits = boost::multiprecision::msb(c) + 1;
  if (bits < 1000) return std::log(c.convert_to<double>());
  const BigCount top = c >> (bits - 60);
  return std::log(top.convert_to<double>()) + static_cast<double>(bits - 60) * std::log(2.0);
}

void for_each_stockout_vector(std::span<const ProductId> products, std::span<const int> stocks, int n,
                              const std::function<void(const StockoutVector&)>& visit) {
  require_parallel(products, stocks);
  const std::size_t k = stocks.size();
  StockoutVector v{{products.begin(), products.end()}, {stocks.begin(), stocks.end()},
                   std::vector<int>(k, 1), n};
  if (k == 0) {
    visit(v);
    return;
  }
  if (n < 1) return;
  const std::uint64_t space = checked_power(n, k);
  if (space == 0 || space > kEnumerationLimit) {
    throw DomainError("enumeration space n^k exceeds the brute-force limit");
  }
  for (std::uint64_t x = 0; x < space; ++x) {
    decode(x, n, v.indices);
    if (is_feasible(v)) visit(v);
  }
}

std::vector<StockoutVector> enumerate_stockout_vectors(std::span<const ProductId> products,
                                                       std::span<const int> stocks, int n) {
  std::vector<StockoutVector> out;
  for_each_stockout_vector(products, stocks, n, [&](const StockoutVector& v) { out.push_back(v); });
  return out;
}

std::vector<StockoutVector> enumerate_stockout_vectors(std::span<const int> stocks, int n) {
  const auto ids = default_labels(stocks.size());
  return enumerate_stockout_vectors(ids, stocks, n);
}

FullPeriodLcg::FullPeriodLcg(unsigned bits, std::uint64_t multiplier, std::uint64_t increment,
                             std::uint64_t state)
    : mask_(bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1),
      multiplier_((multiplier & ~std::uint64_t{3}) | 1),
      increment_(increment | 1),
      state_(state & mask_) {}

std::uint64_t FullPeriodLcg::next() {
  state_ = (multiplier_ * state_ + increment_) & mask_;
  return state_;
}

std::vector<StockoutVector> sample_stockout_vectors(std::span<const ProductId> products,
                                                    std::span<const int> stocks, int n,
                                                    std::uint64_t sample_size, std::uint64_t seed,
                                                    SamplerStats* stats) {
  require_parallel(products, stocks);
  const BigCount count = count_stockout_vectors(stocks, n);
  if (BigCount(sample_size) > count) throw DomainError("sample size exceeds the number of feasible vectors");
  std::vector<StockoutVector> out;
  if (sample_size == 0) return out;

  const std::size_t k = stocks.size();
  StockoutVector v{{products.begin(), products.end()}, {stocks.begin(), stocks.end()},
                   std::vector<int>(k, 1), n};
  if (k == 0) {
    out.push_back(v);
    return out;
  }
  const std::uint64_t space = checked_power(n, k);
  if (space == 0) throw DomainError("n^k is not representable");

  std::mt19937_64 rng(seed);
  const unsigned bits = static_cast<unsigned>(std::bit_width(space - 1));
  const std::uint64_t multiplier = rng();
  const std::uint64_t increment = rng();

  std::uniform_int_distribution<std::uint64_t> uniform(0, space - 1);
  SamplerStats local;
  std::uint64_t start = 0;
  for (;;) {
    start = uniform(rng);
    ++local.raw_draws;
    decode(start, n, v.indices);
    if (is_feasible(v)) break;
  }
  ++local.accepted;
  out.push_back(v);

  FullPeriodLcg lcg(bits, multiplier, increment, start);
  while (out.size() < sample_size) {
    const std::uint64_t x = lcg.next();
    if (x == start) break;  // full cycle; cannot happen while sample_size <= count
    if (x >= space) continue;
    ++local.raw_draws;
    decode(x, n, v.indices);
    if (!is_feasible(v)) continue;
    ++local.accepted;
    out.push_back(v);
  }
  if (stats) {
    stats->raw_draws += local.raw_draws;
    stats->accepted += local.accepted;
  }
  return out;
}

std::vector<StockoutVector> sample_stockout_vectors(std::span<const int> stocks, int n,
                                                    std::uint64_t sample_size, std::uint64_t seed,
                                                    SamplerStats* stats) {
  const auto ids = default_labels(stocks.size());
  return sample_stockout_vectors(ids, stocks, n, sample_size, seed, stats);
}

SegmentDecomposition to_segments(const StockoutVector& v) {
  if (!is_feasible(v)) throw DomainError("stock-out vector is infeasible");
  std::vector<int> order(v.indices.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return v.indices[a] < v.indices[b]; });

  SegmentDecomposition d;
  int previous = 0;
  for (int j : order) {
    d.stockout_order.push_back(v.products[j]);
    d.segment_sizes.push_back(v.indices[j] - previous - 1);
    previous = v.indices[j];
  }
  d.segment_sizes.push_back(v.arrivals - previous);
  return d;
}

StockoutVector from_segments(const SegmentDecomposition& segments, std::span<const ProductId> products,
                             std::span<const int> stocks) {
  const int k = segments.stockout_count();
  if (static_cast<int>(segments.segment_sizes.size()) != k + 1 || static_cast<int>(stocks.size()) != k ||
      static_cast<int>(products.size()) != k) {
    throw DomainError("segment decomposition does not match the product list");
  }
  StockoutVector v;
  v.products.assign(products.begin(), products.end());
  v.indices.assign(k, 0);
  v.stocks.assign(k, 0);
  int position = 0;
  for (int j = 0; j < k; ++j) {
    position += segments.segment_sizes[j] + 1;
    const ProductId a = segments.stockout_order[j];
    auto it = std::find(products.begin(), products.end(), a);
    if (it == products.end()) throw DomainError("stock-out order names an unknown product");
    const auto slot = static_cast<std::size_t>(it - products.begin());
    v.indices[slot] = position;
    v.stocks[slot] = stocks[j];
  }
  v.arrivals = position + segments.segment_sizes[k];
  return v;
}

double log_multinomial(std::span<const int> counts) {
  int total = 0;
  double result = 0.0;
  for (int c : counts) {
    if (c < 0) throw DomainError("multinomial counts must be non-negative");
    total += c;
    result -= log_factorial(c);
  }
  return result + log_factorial(total);
}

double log_multinomial(std::initializer_list<int> counts) {
  return log_multinomial(std::span<const int>(counts.begin(), counts.size()));
}

BigCount multinomial_exact(std::span<const int> counts) {
  // Product of binomials C(c_1 + ... + c_i, c_i), each built incrementally.
  BigCount result = 1;
  int running = 0;
  for (int c : counts) {
    if (c < 0) throw DomainError("multinomial counts must be non-negative");
    for (int i = 1; i <= c; ++i) {
      ++running;
      result = result * running / i;
    }
  }
  return result;
}

}  // namespace stockout
