#include "stockout/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace stockout {

std::string_view granularity_name(Granularity g) {
  switch (g) {
    case Granularity::Complete:
      return "complete";
    case Granularity::TransactionsTimed:
      return "transactions-timed";
    case Granularity::Transactions:
      return "transactions";
    case Granularity::Sales:
      return "sales";
    case Granularity::SalesNoNull:
      return "sales-no-null";
  }
  return "sales";
}

std::optional<Granularity> parse_granularity(std::string_view name) {
  for (Granularity g : {Granularity::Complete, Granularity::TransactionsTimed, Granularity::Transactions,
                        Granularity::Sales, Granularity::SalesNoNull}) {
    if (granularity_name(g) == name) return g;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

const VisitContext& context_of(const Dataset& d, std::size_t v) {
  switch (d.granularity) {
    case Granularity::Complete:
      return d.complete[v].context;
    case Granularity::TransactionsTimed:
    case Granularity::Transactions:
      return d.transactions[v].context;
    default:
      return d.sales[v].context;
  }
}

/// Per-product sales of visit v, whatever the granularity.
std::map<ProductId, int> sales_of(const Dataset& d, std::size_t v) {
  std::map<ProductId, int> out;
  switch (d.granularity) {
    case Granularity::Complete:
      for (const Event& e : d.complete[v].events) {
        if (!e.choice.is_null()) ++out[e.choice.product()];
      }
      break;
    case Granularity::TransactionsTimed:
    case Granularity::Transactions:
      for (const Transaction& t : d.transactions[v].transactions) ++out[t.product];
      break;
    default:
      for (const auto& [a, n] : d.sales[v].sales) {
        if (n > 0) out[a] = n;
      }
  }
  return out;
}

std::string visit_label(std::size_t v) { return "visit " + std::to_string(v + 1) + ": "; }

}  // namespace

std::size_t Dataset::size() const {
  switch (granularity) {
    case Granularity::Complete:
      return complete.size();
    case Granularity::TransactionsTimed:
    case Granularity::Transactions:
      return transactions.size();
    default:
      return sales.size();
  }
}

std::vector<ProductId> Dataset::catalog() const {
  std::set<ProductId> ids;
  for (std::size_t v = 0; v < size(); ++v) {
    for (ProductId a : context_of(*this, v).assortment.products) ids.insert(a);
  }
  return {ids.begin(), ids.end()};
}

bool Dataset::includes_null() const {
  switch (granularity) {
    case Granularity::Sales:
      return true;
    case Granularity::SalesNoNull:
      return false;
    default:
      return size() == 0 || context_of(*this, 0).assortment.includes_null;
  }
}

double Dataset::total_horizon() const {
  double total = 0.0;
  for (std::size_t v = 0; v < size(); ++v) total += context_of(*this, v).horizon;
  return total;
}

void Dataset::check() const {
  const bool with_null = includes_null();
  for (std::size_t v = 0; v < size(); ++v) {
    const VisitContext& ctx = context_of(*this, v);
    try {
      if (ctx.assortment.includes_null != with_null) {
        throw DataError(std::string("null alternative flag does not match granularity ") +
                        std::string(granularity_name(granularity)));
      }
      switch (granularity) {
        case Granularity::Complete: {
          check_context(ctx);
          const ValidationReport report = validate_complete_path(complete[v]);
          if (!report.ok()) throw DataError(report.summary());
          break;
        }
        case Granularity::TransactionsTimed:
        case Granularity::Transactions:
          if (transactions[v].timestamps_present != (granularity == Granularity::TransactionsTimed)) {
            throw DataError("timestamps do not match granularity");
          }
          check_record(transactions[v]);
          break;
        default:
          check_summary(sales[v]);
      }
    } catch (const DataError& e) {
      throw DataError(visit_label(v) + e.what());
    }
  }
}

Dataset Dataset::prefix(std::size_t visits) const {
  Dataset out = *this;
  out.complete.resize(std::min(visits, complete.size()));
  out.transactions.resize(std::min(visits, transactions.size()));
  out.sales.resize(std::min(visits, sales.size()));
  return out;
}

Dataset dataset_from_paths(const std::vector<CompletePath>& paths, Granularity granularity) {
  Dataset d;
  d.granularity = granularity;
  for (const CompletePath& p : paths) {
    switch (granularity) {
      case Granularity::Complete:
        d.complete.push_back(p);
        break;
      case Granularity::TransactionsTimed:
      case Granularity::Transactions:
        d.transactions.push_back(project_transactions(p, granularity == Granularity::TransactionsTimed));
        break;
      default:
        d.sales.push_back(project_sales(p));
    }
  }
  return d;
}

Dataset hide_product(const Dataset& data, ProductId product) {
  if (data.granularity != Granularity::SalesNoNull) {
    throw DataError("hiding a product needs sales-no-null data");
  }
  Dataset out;
  out.granularity = Granularity::Sales;
  out.hidden_product = product;
  for (std::size_t v = 0; v < data.sales.size(); ++v) {
    const SalesSummary& z = data.sales[v];
    if (!z.context.assortment.contains(product) || z.context.stock_of(product) != kUnlimitedStock) {
      throw DataError(visit_label(v) + "hidden product " + std::to_string(product) +
                      " must be offered with unlimited stock");
    }
    SalesSummary h;
    h.context.horizon = z.context.horizon;
    std::vector<ProductId> ids;
    for (ProductId a : z.context.assortment.products) {
      if (a != product) ids.push_back(a);
    }
    h.context.assortment = Assortment(ids, true);
    h.context.stocks = z.context.stocks;
    h.context.stocks.erase(product);
    h.sales = z.sales;
    h.sales.erase(product);
    out.sales.push_back(std::move(h));
  }
  return out;
}

double FitResult::probability_of(ProductId id) const {
  if (hidden_product && *hidden_product == id) return null_probability;
  for (std::size_t i = 0; i < products.size(); ++i) {
    if (products[i] == id) return probabilities[i];
  }
  throw DomainError("product " + std::to_string(id) + " is not in the fitted catalog");
}

std::vector<double> catalog_probabilities(const std::vector<ProductId>& catalog, const ModelParams& params,
                                          bool includes_null, double* null_probability) {
  double d = includes_null ? 1.0 : 0.0;
  for (ProductId a : catalog) d += params.weights[a];
  std::vector<double> out;
  for (ProductId a : catalog) out.push_back(params.weights[a] / d);
  if (null_probability) *null_probability = includes_null ? 1.0 / d : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Likelihood surfaces

namespace {

enum class Part { Full, Arrival, Choice, Naive, NaiveChoice };

/// Neumaier summation: the dataset total does not depend on magnitudes
/// cancelling in a lucky order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double total() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Which coordinates are free: x = [log lambda?, log w_a for a in free].
struct Layout {
  bool has_lambda = true;
  std::vector<ProductId> free;
  ModelParams base;

  int dim() const { return (has_lambda ? 1 : 0) + static_cast<int>(free.size()); }

  Eigen::VectorXd pack(const ModelParams& p) const {
    Eigen::VectorXd x(dim());
    int i = 0;
    if (has_lambda) x[i++] = std::log(p.lambda);
    for (ProductId a : free) x[i++] = std::log(p.weights[a]);
    return x;
  }

  ModelParams unpack(const Eigen::VectorXd& x) const {
    ModelParams p = base;
    int i = 0;
    if (has_lambda) p.lambda = std::exp(x[i++]);
    for (ProductId a : free) p.weights[a] = std::exp(x[i++]);
    return p;
  }
};

std::string group_key(const VisitContext& ctx, const std::map<ProductId, int>& counts,
                      const std::vector<ProductId>& order) {
  std::ostringstream key;
  key << std::hexfloat << ctx.horizon << '|' << ctx.assortment.includes_null << '|';
  for (const auto& [a, s] : ctx.stocks) key << a << ':' << s << ',';
  key << '|';
  for (ProductId a : ctx.assortment.products) key << a << ',';
  key << '|';
  for (const auto& [a, n] : counts) key << a << ':' << n << ',';
  key << '|';
  for (ProductId a : order) key << a << ',';
  return key.str();
}

class Surface {
 public:
  Surface(const Dataset& data, Part part, const EstimationOptions& options, double naive_rate)
      : data_(data), part_(part), saa_(part == Part::Full && data.granularity == Granularity::Sales && options.saa) {
    TruncationPolicy trunc = options.truncation;
    if (!trunc.fixed_m && trunc.lambda_cap <= 0.0) trunc.lambda_cap = 4.0 * naive_rate;
    const bool groupable = !saa_ && data.granularity != Granularity::Complete &&
                           data.granularity != Granularity::TransactionsTimed;
    std::map<std::string, std::size_t> seen;
    for (std::size_t v = 0; v < data.size(); ++v) {
      if (groupable) {
        const std::map<ProductId, int> counts = sales_of(data, v);
        std::vector<ProductId> order;
        if (data.granularity == Granularity::Transactions) {
          for (const Transaction& t : data.transactions[v].transactions) order.push_back(t.product);
        }
        const std::string key = group_key(context_of(data, v), counts, order);
        auto [it, fresh] = seen.emplace(key, visits_.size());
        if (!fresh) {
          weight_[it->second] += 1.0;
          continue;
        }
      }
      visits_.push_back(v);
      weight_.push_back(1.0);
      int observed = 0;
      for (const auto& [a, n] : sales_of(data, v)) observed += n;
      const int m = trunc.resolve(observed, context_of(data, v).horizon, naive_rate);
      m_.push_back(m);
      if (saa_) {
        plans_.push_back(make_saa_plan(data.sales[v], m, options.saa->samples_per_n, mix_seed(options.saa->seed, v)));
      }
    }
  }

  double value(const ModelParams& p) const {
    const AttractionProbabilities<double> probs(p.weights, data_.includes_null());
    CompensatedSum sum;
    for (std::size_t g = 0; g < visits_.size(); ++g) {
      const double v = visit_value(g, p.lambda, probs);
      if (v == kNegInf) return kNegInf;
      sum.add(weight_[g] * v);
    }
    return sum.total();
  }

  double value_and_gradient(const Layout& layout, const Eigen::VectorXd& x, Eigen::VectorXd* gradient) const {
    if (!gradient) return value(layout.unpack(x));
    const int dim = layout.dim();
    if (dim > kMaxGradientSize) throw DomainError("too many free parameters for the gradient");
    const ModelParams p = layout.unpack(x);
    int slot = 0;
    AutoDiff lambda(p.lambda, GradientVector::Zero(dim));
    if (layout.has_lambda) lambda.derivatives()[slot++] = p.lambda;
    Vector<AutoDiff> w(p.weights.size());
    for (Eigen::Index a = 0; a < w.size(); ++a) w[a] = AutoDiff(p.weights[a], GradientVector::Zero(dim));
    for (ProductId a : layout.free) w[a].derivatives()[slot++] = p.weights[a];
    const AttractionProbabilities<AutoDiff> probs(w, data_.includes_null());

    CompensatedSum sum;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    for (std::size_t g = 0; g < visits_.size(); ++g) {
      const AutoDiff v = visit_value(g, lambda, probs);
      if (v.value() == kNegInf) return kNegInf;
      sum.add(weight_[g] * v.value());
      grad += weight_[g] * v.derivatives();
    }
    *gradient = grad;
    return sum.total();
  }

 private:
  template <typename Scalar>
  Scalar visit_value(std::size_t g, const Scalar& lambda, const AttractionProbabilities<Scalar>& probs) const {
    using std::log;
    const std::size_t v = visits_[g];
    switch (data_.granularity) {
      case Granularity::Complete: {
        const CompletePath& path = data_.complete[v];
        if (part_ == Part::Choice) {
          // L1 at a constant unit rate carries only the choice terms and -T.
          return l1_complete(path, probs, constant_like(lambda, 1.0)) + path.context.horizon;
        }
        return l1_complete(path, probs, lambda);
      }
      case Granularity::TransactionsTimed:
        return l3_transactions_timed(data_.transactions[v], probs, lambda);
      case Granularity::Transactions:
        return l4_transactions(data_.transactions[v], probs, lambda, m_[g]);
      default:
        break;
    }
    const SalesSummary& z = data_.sales[v];
    switch (part_) {
      case Part::Full:
        if (data_.granularity == Granularity::SalesNoNull) return l6_sales_no_null_attraction(z, probs, lambda);
        if (saa_) return l5_saa(z, probs, lambda, plans_[g]);
        return l5_sales_attraction(z, probs, lambda, m_[g]);
      case Part::Arrival:
        return l6_arrival_part(z, lambda);
      case Part::Choice:
        return l6_choice_part_attraction(z, probs, lambda);
      case Part::Naive:
      case Part::NaiveChoice:
        return naive_value(z, probs, lambda);
    }
    return constant_like(lambda, kNegInf);
  }

  /// Stock-outs ignored: the initial assortment faces every arrival.
  template <typename Scalar>
  Scalar naive_value(const SalesSummary& z, const AttractionProbabilities<Scalar>& probs,
                     const Scalar& lambda) const {
    using std::exp;
    using std::log;
    const ProductMask mask = z.context.assortment.mask();
    Scalar sum = constant_like(lambda, 0.0);
    if (z.context.assortment.includes_null) {
      // Independent thinned Poisson counts.
      const Scalar log_mean = log(z.context.horizon * lambda);
      for (ProductId a : z.context.assortment.products) {
        const Scalar log_rate = log_mean + probs.log_prob(a, mask);
        sum += log_poisson(z.sold(a), Scalar(exp(log_rate)), log_rate);
      }
      return sum;
    }
    // Poisson total times a multinomial split.
    const int nt = z.total_sales();
    sum += log_factorial(nt);
    for (ProductId a : z.context.assortment.products) {
      const int n = z.sold(a);
      if (n == 0) continue;
      sum += static_cast<double>(n) * probs.log_prob(a, mask) - log_factorial(n);
    }
    if (part_ == Part::NaiveChoice) return sum;
    const Scalar mean = z.context.horizon * lambda;
    return sum + log_poisson(nt, mean, Scalar(log(mean)));
  }

  const Dataset& data_;
  Part part_;
  bool saa_;
  std::vector<std::size_t> visits_;
  std::vector<double> weight_;
  std::vector<int> m_;
  std::vector<SaaVisitPlan> plans_;
};

int weight_size(const std::vector<ProductId>& catalog) {
  return catalog.empty() ? 1 : catalog.back() + 1;
}

/// Log-weights that the data can identify: every offered product, minus one
/// pinned product when there is no null (the scale is free then).
std::vector<ProductId> free_products(const Dataset& data) {
  std::vector<ProductId> free = data.catalog();
  if (!data.includes_null() && !free.empty()) free.erase(free.begin());
  return free;
}

FitResult make_result(const Dataset& data, const ModelParams& params, std::string estimator) {
  FitResult r;
  r.estimator = std::move(estimator);
  r.granularity = data.granularity;
  r.params = params;
  r.products = data.catalog();
  r.includes_null = data.includes_null();
  r.probabilities = catalog_probabilities(r.products, params, r.includes_null, &r.null_probability);
  r.hidden_product = data.hidden_product;
  return r;
}

QuasiNewtonResult maximize_part(const Surface& surface, const Layout& layout, const ModelParams& start,
                                const QuasiNewtonOptions& options) {
  const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    return surface.value_and_gradient(layout, x, g);
  };
  return maximize_bfgs(f, layout.pack(start), options);
}

struct LineResult {
  double log_lambda = 0.0;
  double value = kNegInf;
  int evaluations = 0;
};

/// Golden section on log lambda over the bracket, or on its thirds.
LineResult line_search(const std::function<double(double)>& profile, double lo, double hi,
                       const EstimationOptions& options) {
  LineResult best;
  const int pieces = options.multi_start ? 3 : 1;
  const double width = (hi - lo) / pieces;
  for (int i = 0; i < pieces; ++i) {
    const GoldenResult g = golden_section_max(profile, lo + i * width, lo + (i + 1) * width, options.line_tolerance);
    best.evaluations += g.evaluations;
    if (g.value > best.value) {
      best.log_lambda = g.x;
      best.value = g.value;
    }
  }
  return best;
}

void require_kind(const Dataset& data, Granularity kind) {
  if (data.granularity != kind) {
    throw DataError("data granularity " + std::string(granularity_name(data.granularity)) +
                    " does not match requested kind " + std::string(granularity_name(kind)));
  }
}

}  // namespace

ModelParams naive_start(const Dataset& data) {
  const std::vector<ProductId> catalog = data.catalog();
  ModelParams p;
  p.weights = Eigen::VectorXd::Ones(weight_size(catalog));
  std::map<ProductId, double> sold;
  double total = 0.0;
  double arrivals = 0.0;
  for (std::size_t v = 0; v < data.size(); ++v) {
    for (const auto& [a, n] : sales_of(data, v)) {
      sold[a] += n;
      total += n;
    }
    if (data.granularity == Granularity::Complete) arrivals += static_cast<double>(data.complete[v].events.size());
  }
  for (ProductId a : catalog) p.weights[a] = (total > 0.0 ? sold[a] / total : 0.0) + 1e-6;
  const double horizon = data.total_horizon();
  if (horizon <= 0.0) throw DataError("dataset has no visits");
  double po = 0.0;
  if (data.includes_null()) {
    double d = 1.0;
    for (ProductId a : catalog) d += p.weights[a];
    po = 1.0 / d;
  }
  if (data.granularity == Granularity::Complete) {
    p.lambda = arrivals > 0.0 ? arrivals / horizon : 1.0 / horizon;
  } else {
    // With no sales at all there is no rate to anchor on: one sale's worth.
    p.lambda = (total > 0.0 ? total : 1.0) / (horizon * (1.0 - po));
  }
  return p;
}

double dataset_log_likelihood(const Dataset& data, Granularity kind, const ModelParams& params,
                              const EstimationOptions& options) {
  require_kind(data, kind);
  if (data.size() == 0) return 0.0;
  const Surface surface(data, Part::Full, options, naive_start(data).lambda);
  return surface.value(params);
}

double naive_log_likelihood(const Dataset& data, const ModelParams& params) {
  if (data.granularity != Granularity::Sales && data.granularity != Granularity::SalesNoNull) {
    throw DataError("the naive likelihood needs sales data");
  }
  if (data.size() == 0) return 0.0;
  return Surface(data, Part::Naive, {}, params.lambda).value(params);
}

FitResult fit_complete(const Dataset& data, const EstimationOptions& options) {
  require_kind(data, Granularity::Complete);
  if (data.size() == 0) throw DataError("cannot fit an empty dataset");
  ModelParams start = naive_start(data);
  double arrivals = 0.0;
  for (const CompletePath& p : data.complete) arrivals += static_cast<double>(p.events.size());
  start.lambda = arrivals / data.total_horizon();

  const Surface choice(data, Part::Choice, options, start.lambda);
  const Layout layout{false, free_products(data), start};
  const QuasiNewtonResult q = maximize_part(choice, layout, start, options.quasi_newton);
  ModelParams params = layout.unpack(q.x);
  params.lambda = start.lambda;

  FitResult r = make_result(data, params, "correct");
  r.log_likelihood = Surface(data, Part::Full, options, start.lambda).value(params);
  r.iterations = q.iterations;
  r.converged = q.converged;
  return r;
}

FitResult fit(const Dataset& data, Granularity kind, const EstimationOptions& options) {
  require_kind(data, kind);
  if (kind == Granularity::Complete) return fit_complete(data, options);
  if (data.size() == 0) throw DataError("cannot fit an empty dataset");
  if (options.saa && kind != Granularity::Sales) throw DataError("SAA applies to sales data with a null");

  const ModelParams start = naive_start(data);
  const double u0 = std::log(start.lambda);
  const double lo = u0 + std::log(options.bracket_low);
  const double hi = u0 + std::log(options.bracket_high);
  const std::vector<ProductId> free = free_products(data);
  int iterations = 0;

  ModelParams best = start;
  bool converged = true;

  if (kind == Granularity::SalesNoNull) {
    // Separable: weights from the choice part, lambda from the arrival part.
    const Surface choice(data, Part::Choice, options, start.lambda);
    const Layout weights{false, free, start};
    const QuasiNewtonResult q = maximize_part(choice, weights, start, options.quasi_newton);
    best = weights.unpack(q.x);
    iterations += q.iterations;
    converged = q.converged;

    const Surface arrival(data, Part::Arrival, options, start.lambda);
    const Layout rate{true, {}, best};
    const auto profile = [&](double u) {
      ModelParams p = best;
      p.lambda = std::exp(u);
      return arrival.value(p);
    };
    const LineResult line = line_search(profile, lo, hi, options);
    iterations += line.evaluations;
    ModelParams at_line = best;
    at_line.lambda = std::exp(line.log_lambda);
    const QuasiNewtonResult polish = maximize_part(arrival, rate, at_line, options.quasi_newton);
    iterations += polish.iterations;
    const double u = polish.x[0];
    if (u < lo - options.line_tolerance || u > hi + options.line_tolerance) {
      best.lambda = at_line.lambda;
      converged = false;
    } else {
      best.lambda = std::exp(u);
      converged = converged && polish.converged;
    }
  } else {
    const Surface full(data, Part::Full, options, start.lambda);
    // Each inner solve starts from the naive weights. Warm starts are
    // cheaper but carry the saturated solutions of a too-small rate
    // (weights -> infinity, no null choices) across the bracket.
    Layout inner{false, free, start};
    ModelParams warm = start;
    const auto profile = [&](double u) {
      inner.base = start;
      inner.base.lambda = std::exp(u);
      const QuasiNewtonResult q = maximize_part(full, inner, inner.base, options.quasi_newton);
      iterations += q.iterations;
      warm = inner.unpack(q.x);
      return q.value;
    };
    const LineResult line = line_search(profile, lo, hi, options);
    iterations += line.evaluations;
    // Re-solve the inner problem at the chosen rate, then polish jointly.
    profile(line.log_lambda);
    ModelParams at_line = warm;
    at_line.lambda = std::exp(line.log_lambda);
    const Layout joint{true, free, at_line};
    const QuasiNewtonResult polish = maximize_part(full, joint, at_line, options.quasi_newton);
    iterations += polish.iterations;
    const double u = polish.x[0];
    if (u < lo - options.line_tolerance || u > hi + options.line_tolerance || !(polish.value >= line.value)) {
      best = at_line;
      converged = false;
    } else {
      best = joint.unpack(polish.x);
      converged = polish.converged;
    }
  }

  FitResult r = make_result(data, best, options.saa ? "saa" : "correct");
  r.saa = options.saa;
  r.log_likelihood = Surface(data, Part::Full, options, start.lambda).value(best);
  r.iterations = iterations;
  r.converged = converged;
  return r;
}

FitResult fit_naive(const Dataset& data, const EstimationOptions& options) {
  if (data.granularity != Granularity::Sales && data.granularity != Granularity::SalesNoNull) {
    throw DataError("the naive estimator needs sales data");
  }
  if (data.size() == 0) throw DataError("cannot fit an empty dataset");
  ModelParams start = naive_start(data);
  const std::vector<ProductId> free = free_products(data);
  ModelParams params;
  QuasiNewtonResult q;
  if (data.granularity == Granularity::SalesNoNull) {
    double total = 0.0;
    for (const SalesSummary& z : data.sales) total += z.total_sales();
    start.lambda = total / data.total_horizon();
    const Surface choice(data, Part::NaiveChoice, options, start.lambda);
    const Layout layout{false, free, start};
    q = maximize_part(choice, layout, start, options.quasi_newton);
    params = layout.unpack(q.x);
  } else {
    const Surface naive(data, Part::Naive, options, start.lambda);
    const Layout layout{true, free, start};
    q = maximize_part(naive, layout, start, options.quasi_newton);
    params = layout.unpack(q.x);
  }
  FitResult r = make_result(data, params, "naive");
  r.log_likelihood = naive_log_likelihood(data, params);
  r.iterations = q.iterations;
  r.converged = q.converged;
  return r;
}

}  // namespace stockout
