#include "stockout/model.hpp"

#include <algorithm>
#include <sstream>

namespace stockout {

Assortment::Assortment(std::vector<ProductId> ids, bool with_null)
    : products(std::move(ids)), includes_null(with_null) {
  std::sort(products.begin(), products.end());
  if (std::adjacent_find(products.begin(), products.end()) != products.end()) {
    throw DomainError("assortment contains duplicate products");
  }
  for (ProductId id : products) {
    if (id < 0 || id >= kMaxProducts) throw DomainError("product id out of range");
  }
}

ProductMask Assortment::mask() const {
  ProductMask m = 0;
  for (ProductId id : products) m |= product_bit(id);
  return m;
}

bool Assortment::contains(ProductId id) const {
  return std::binary_search(products.begin(), products.end(), id);
}

bool Assortment::offers(const Choice& c) const {
  return c.is_null() ? includes_null : contains(c.product());
}

int VisitContext::stock_of(ProductId id) const {
  auto it = stocks.find(id);
  if (it == stocks.end()) throw DataError("no stock level for product " + std::to_string(id));
  return it->second;
}

int SalesSummary::sold(ProductId id) const {
  auto it = sales.find(id);
  return it == sales.end() ? 0 : it->second;
}

int SalesSummary::total_sales() const {
  int total = 0;
  for (const auto& [id, n] : sales) total += n;
  return total;
}

std::vector<ProductId> SalesSummary::stocked_out() const {
  std::vector<ProductId> out;
  for (ProductId id : context.assortment.products) {
    auto it = context.stocks.find(id);
    if (it != context.stocks.end() && it->second != kUnlimitedStock && sold(id) == it->second) {
      out.push_back(id);
    }
  }
  return out;
}

int SegmentDecomposition::total_arrivals() const {
  int n = stockout_count();
  for (int s : segment_sizes) n += s;
  return n;
}

bool ValidationReport::has(Violation::Kind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "OK";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << "arrival " << violations[i].arrival << ": " << violations[i].message;
  }
  return os.str();
}

ValidationReport validate_complete_path(const CompletePath& path, const Assortment& assortment,
                                        const StockLevels& stocks) {
  ValidationReport report;
  std::map<ProductId, int> used;
  double previous = 0.0;
  for (std::size_t i = 0; i < path.events.size(); ++i) {
    const Event& e = path.events[i];
    const std::size_t arrival = i + 1;
    if (e.time < 0.0 || e.time > path.context.horizon) {
      report.violations.push_back({Violation::Kind::TimeRange, arrival, "time outside [0, T]"});
    }
    if (e.time < previous) {
      report.violations.push_back({Violation::Kind::TimeOrder, arrival, "times decrease"});
    }
    previous = std::max(previous, e.time);

    if (e.choice.is_null()) {
      if (!assortment.includes_null) {
        report.violations.push_back(
            {Violation::Kind::NullUnavailable, arrival, "null choice without null alternative"});
      }
      continue;
    }
    const ProductId a = e.choice.product();
    auto stock = stocks.find(a);
    if (!assortment.contains(a) || stock == stocks.end()) {
      report.violations.push_back({Violation::Kind::UnavailableChoice, arrival,
                                   "product " + std::to_string(a) + " not offered"});
      continue;
    }
    int& count = used[a];
    if (count >= stock->second) {
      // The first choice past the stock is both unavailable and an overrun.
      report.violations.push_back({Violation::Kind::UnavailableChoice, arrival,
                                   "product " + std::to_string(a) + " already stocked out"});
      report.violations.push_back({Violation::Kind::InventoryOverrun, arrival,
                                   "product " + std::to_string(a) + " sold beyond stock"});
    }
    ++count;
  }
  return report;
}

ValidationReport validate_complete_path(const CompletePath& path) {
  return validate_complete_path(path, path.context.assortment, path.context.stocks);
}

void check_context(const VisitContext& context) {
  if (!(context.horizon > 0.0)) throw DataError("horizon T must be positive");
  for (ProductId id : context.assortment.products) {
    auto it = context.stocks.find(id);
    if (it == context.stocks.end()) {
      throw DataError("missing stock level for product " + std::to_string(id));
    }
    if (it->second < 1) throw DataError("stock level must be >= 1 for product " + std::to_string(id));
  }
  for (const auto& [id, s] : context.stocks) {
    if (!context.assortment.contains(id)) {
      throw DataError("stock given for product " + std::to_string(id) + " outside the assortment");
    }
  }
}

void check_record(const TransactionRecord& record) {
  check_context(record.context);
  std::map<ProductId, int> used;
  double previous = 0.0;
  for (std::size_t i = 0; i < record.transactions.size(); ++i) {
    const Transaction& t = record.transactions[i];
    const std::string where = "transaction " + std::to_string(i + 1) + ": ";
    if (!record.context.assortment.contains(t.product)) {
      throw DataError(where + "product " + std::to_string(t.product) + " not offered");
    }
    if (++used[t.product] > record.context.stock_of(t.product)) {
      throw DataError(where + "product " + std::to_string(t.product) + " sold beyond stock");
    }
    if (t.time.has_value() != record.timestamps_present) {
      throw DataError(where + "timestamps must be present on all transactions or none");
    }
    if (t.time) {
      if (*t.time < 0.0 || *t.time > record.context.horizon) throw DataError(where + "time outside [0, T]");
      if (*t.time < previous) throw DataError(where + "times decrease");
      previous = *t.time;
    }
  }
}

void check_summary(const SalesSummary& summary) {
  check_context(summary.context);
  for (const auto& [id, n] : summary.sales) {
    if (!summary.context.assortment.contains(id)) {
      throw DataError("sales recorded for product " + std::to_string(id) + " outside the assortment");
    }
    if (n < 0 || n > summary.context.stock_of(id)) {
      throw DataError("sales of product " + std::to_string(id) + " outside [0, stock]");
    }
  }
}

namespace {

void require_valid(const CompletePath& path) {
  ValidationReport report = validate_complete_path(path);
  if (!report.ok()) throw DomainError("invalid path: " + report.summary());
}

}  // namespace

TransactionRecord project_transactions(const CompletePath& path, bool keep_times) {
  require_valid(path);
  TransactionRecord record;
  record.context = path.context;
  record.timestamps_present = keep_times;
  for (const Event& e : path.events) {
    if (e.choice.is_null()) continue;
    Transaction t;
    t.product = e.choice.product();
    if (keep_times) t.time = e.time;
    record.transactions.push_back(t);
  }
  return record;
}

SalesSummary project_sales(const CompletePath& path) {
  require_valid(path);
  SalesSummary summary;
  summary.context = path.context;
  for (ProductId id : path.context.assortment.products) summary.sales[id] = 0;
  for (const Event& e : path.events) {
    if (!e.choice.is_null()) ++summary.sales[e.choice.product()];
  }
  return summary;
}

SegmentDecomposition decompose_segments(const CompletePath& path) {
  require_valid(path);
  SegmentDecomposition d;
  d.segment_sizes.push_back(0);
  d.product_splits.emplace_back();
  d.null_splits.push_back(0);
  std::map<ProductId, int> used;
  for (const Event& e : path.events) {
    if (e.choice.is_null()) {
      ++d.segment_sizes.back();
      ++d.null_splits.back();
      continue;
    }
    const ProductId a = e.choice.product();
    if (++used[a] == path.context.stock_of(a)) {
      d.stockout_order.push_back(a);
      d.segment_sizes.push_back(0);
      d.product_splits.emplace_back();
      d.null_splits.push_back(0);
    } else {
      ++d.segment_sizes.back();
      ++d.product_splits.back()[a];
    }
  }
  return d;
}

}  // namespace stockout
