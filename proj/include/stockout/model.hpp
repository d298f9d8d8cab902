#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stockout {

/// Product identifiers are small non-negative integers; they index the
/// dense weight vector directly and map to a bit of a ProductMask.
using ProductId = int;
using ProductMask = std::uint64_t;

inline constexpr int kMaxProducts = 63;

/// Stock level of a product that can never run out.
inline constexpr int kUnlimitedStock = std::numeric_limits<int>::max();

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Thrown when an operation is called outside its domain (bad choice,
/// infeasible prefix, sample size larger than the population, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown for malformed or inconsistent observation data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ProductMask product_bit(ProductId id) {
  return ProductMask{1} << static_cast<unsigned>(id);
}

/// A customer's pick: a product, or the null alternative (no purchase).
class Choice {
 public:
  static Choice null() { return Choice(-1); }
  static Choice product(ProductId id) {
    if (id < 0 || id >= kMaxProducts) throw DomainError("product id out of range");
    return Choice(id);
  }

  bool is_null() const { return id_ < 0; }
  ProductId product() const {
    if (is_null()) throw DomainError("null choice has no product id");
    return id_;
  }

  friend bool operator==(const Choice&, const Choice&) = default;

 private:
  explicit Choice(int id) : id_(id) {}
  int id_;
};

struct Assortment {
  std::vector<ProductId> products;
  bool includes_null = true;

  Assortment() = default;
  Assortment(std::vector<ProductId> ids, bool with_null);

  ProductMask mask() const;
  bool contains(ProductId id) const;
  bool offers(const Choice& c) const;
};

/// ProductId -> initial stock s_a (>= 1, or kUnlimitedStock).
using StockLevels = std::map<ProductId, int>;

/// Arrival rate and per-product attraction weights f_a(beta_a) = beta_a > 0.
/// `weights` is indexed by ProductId; entries for products outside a visit's
/// assortment are ignored by that visit.
template <typename Scalar>
struct BasicModelParams {
  Scalar lambda;
  Vector<Scalar> weights;
};

using ModelParams = BasicModelParams<double>;

/// Horizon, initial assortment and stocks: what makes a visit self-describing.
struct VisitContext {
  double horizon = 1.0;
  Assortment assortment;
  StockLevels stocks;

  int stock_of(ProductId id) const;
};

struct Event {
  double time = 0.0;
  Choice choice = Choice::null();
};

struct CompletePath {
  VisitContext context;
  std::vector<Event> events;
};

struct Transaction {
  std::optional<double> time;
  ProductId product = 0;
};

struct TransactionRecord {
  VisitContext context;
  std::vector<Transaction> transactions;
  bool timestamps_present = false;
};

struct SalesSummary {
  VisitContext context;
  std::map<ProductId, int> sales;

  int sold(ProductId id) const;
  int total_sales() const;
  /// Products whose sales reached their stock, in increasing id order.
  std::vector<ProductId> stocked_out() const;
  int stockout_count() const { return static_cast<int>(stocked_out().size()); }
};

/// Constant-assortment segments of a visit: k stock-outs give k+1 segments.
/// segment_sizes[j] counts arrivals in segment j excluding the arrival that
/// causes the stock-out ending it.
struct SegmentDecomposition {
  std::vector<ProductId> stockout_order;
  std::vector<int> segment_sizes;
  std::vector<std::map<ProductId, int>> product_splits;
  std::vector<int> null_splits;

  int stockout_count() const { return static_cast<int>(stockout_order.size()); }
  int total_arrivals() const;
};

struct Violation {
  enum class Kind {
    InventoryOverrun,
    UnavailableChoice,
    NullUnavailable,
    TimeOrder,
    TimeRange,
  };
  Kind kind;
  std::size_t arrival;  // 1-based
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(Violation::Kind kind) const;
  std::string summary() const;
};

ValidationReport validate_complete_path(const CompletePath& path, const Assortment& assortment,
                                        const StockLevels& stocks);
ValidationReport validate_complete_path(const CompletePath& path);

/// Throws DataError describing the first problem found.
void check_context(const VisitContext& context);
void check_record(const TransactionRecord& record);
void check_summary(const SalesSummary& summary);

TransactionRecord project_transactions(const CompletePath& path, bool keep_times);
SalesSummary project_sales(const CompletePath& path);
SegmentDecomposition decompose_segments(const CompletePath& path);

}  // namespace stockout
