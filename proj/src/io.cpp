#include "stockout/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace stockout {

namespace {

Json stocks_to_json(const StockLevels& stocks) {
  Json j = Json::object();
  for (const auto& [a, s] : stocks) j[std::to_string(a)] = s == kUnlimitedStock ? Json(nullptr) : Json(s);
  return j;
}

Json choice_to_json(const Choice& c) { return c.is_null() ? Json(nullptr) : Json(c.product()); }

void require_fields(const Json& j, const std::set<std::string>& allowed, const std::set<std::string>& required,
                    const std::string& where) {
  if (!j.is_object()) throw DataError(where + "expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw DataError(where + "unknown field \"" + key + "\"");
  }
  for (const std::string& key : required) {
    if (!j.contains(key)) throw DataError(where + "missing field \"" + key + "\"");
  }
}

ProductId parse_id(const std::string& text, const std::string& field) {
  ProductId id = -1;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc() || end != text.data() + text.size() || id < 0 || id >= kMaxProducts) {
    throw DataError("field \"" + field + "\": bad product id \"" + text + "\"");
  }
  return id;
}

ProductId id_value(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) throw DataError("field \"" + field + "\": product id must be an integer");
  const auto id = j.get<long long>();
  if (id < 0 || id >= kMaxProducts) throw DataError("field \"" + field + "\": product id out of range");
  return static_cast<ProductId>(id);
}

double number_value(const Json& j, const std::string& field) {
  if (!j.is_number()) throw DataError("field \"" + field + "\": expected a number");
  return j.get<double>();
}

int int_value(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) throw DataError("field \"" + field + "\": expected an integer");
  return j.get<int>();
}

VisitContext parse_context(const Json& j) {
  VisitContext ctx;
  ctx.horizon = number_value(j.at("T"), "T");
  if (!j.at("assortment").is_array()) throw DataError("field \"assortment\": expected an array");
  std::vector<ProductId> ids;
  for (const Json& a : j.at("assortment")) ids.push_back(id_value(a, "assortment"));
  if (!j.at("null").is_boolean()) throw DataError("field \"null\": expected true or false");
  try {
    ctx.assortment = Assortment(ids, j.at("null").get<bool>());
  } catch (const DomainError& e) {
    throw DataError(std::string("field \"assortment\": ") + e.what());
  }
  if (!j.at("stocks").is_object()) throw DataError("field \"stocks\": expected an object");
  for (const auto& [key, value] : j.at("stocks").items()) {
    ctx.stocks[parse_id(key, "stocks")] = value.is_null() ? kUnlimitedStock : int_value(value, "stocks");
  }
  return ctx;
}

void parse_line(const Json& j, Dataset& d) {
  require_fields(j, {"T", "assortment", "null", "stocks", "granularity", "data"},
                 {"T", "assortment", "null", "stocks", "granularity", "data"}, "");
  VisitContext ctx = parse_context(j);
  const Json& data = j.at("data");
  switch (d.granularity) {
    case Granularity::Complete: {
      if (!data.is_array()) throw DataError("field \"data\": expected an array of events");
      CompletePath p;
      p.context = std::move(ctx);
      for (const Json& e : data) {
        require_fields(e, {"t", "choice"}, {"t", "choice"}, "field \"data\": ");
        const Json& c = e.at("choice");
        p.events.push_back({number_value(e.at("t"), "t"),
                            c.is_null() ? Choice::null() : Choice::product(id_value(c, "choice"))});
      }
      d.complete.push_back(std::move(p));
      break;
    }
    case Granularity::TransactionsTimed:
    case Granularity::Transactions: {
      if (!data.is_array()) throw DataError("field \"data\": expected an array of transactions");
      TransactionRecord r;
      r.context = std::move(ctx);
      r.timestamps_present = d.granularity == Granularity::TransactionsTimed;
      for (const Json& e : data) {
        if (r.timestamps_present) {
          require_fields(e, {"t", "product"}, {"t", "product"}, "field \"data\": ");
        } else {
          require_fields(e, {"product"}, {"product"}, "field \"data\": ");
        }
        Transaction t;
        t.product = id_value(e.at("product"), "product");
        if (r.timestamps_present) t.time = number_value(e.at("t"), "t");
        r.transactions.push_back(t);
      }
      d.transactions.push_back(std::move(r));
      break;
    }
    default: {
      if (!data.is_object()) throw DataError("field \"data\": expected a sales map");
      SalesSummary z;
      z.context = std::move(ctx);
      for (const auto& [key, value] : data.items()) z.sales[parse_id(key, "data")] = int_value(value, "data");
      d.sales.push_back(std::move(z));
    }
  }
}

}  // namespace

std::string format_number(double x) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), x);
  return std::string(buffer, end);
}

Json visit_to_json(const Dataset& d, std::size_t v) {
  const VisitContext* ctx = nullptr;
  Json data;
  switch (d.granularity) {
    case Granularity::Complete: {
      const CompletePath& p = d.complete[v];
      ctx = &p.context;
      data = Json::array();
      for (const Event& e : p.events) data.push_back({{"t", e.time}, {"choice", choice_to_json(e.choice)}});
      break;
    }
    case Granularity::TransactionsTimed:
    case Granularity::Transactions: {
      const TransactionRecord& r = d.transactions[v];
      ctx = &r.context;
      data = Json::array();
      for (const Transaction& t : r.transactions) {
        Json e = {{"product", t.product}};
        if (r.timestamps_present) e["t"] = *t.time;
        data.push_back(e);
      }
      break;
    }
    default: {
      const SalesSummary& z = d.sales[v];
      ctx = &z.context;
      data = Json::object();
      for (const auto& [a, n] : z.sales) data[std::to_string(a)] = n;
    }
  }
  return {{"T", ctx->horizon},
          {"assortment", ctx->assortment.products},
          {"null", ctx->assortment.includes_null},
          {"stocks", stocks_to_json(ctx->stocks)},
          {"granularity", granularity_name(d.granularity)},
          {"data", data}};
}

void write_dataset(std::ostream& out, const Dataset& data) {
  for (std::size_t v = 0; v < data.size(); ++v) out << visit_to_json(data, v).dump() << '\n';
}

void write_dataset_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_dataset(out, data);
}

Dataset read_dataset(std::istream& in, std::optional<Granularity> expected) {
  Dataset d;
  d.granularity = expected.value_or(Granularity::Sales);
  bool fixed = expected.has_value();
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = "line " + std::to_string(number) + ": ";
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      if (!j.is_object() || !j.contains("granularity") || !j.at("granularity").is_string()) {
        throw DataError("field \"granularity\": missing or not a string");
      }
      const auto g = parse_granularity(j.at("granularity").get<std::string>());
      if (!g) throw DataError("field \"granularity\": unknown value " + j.at("granularity").dump());
      if (fixed && *g != d.granularity) {
        throw DataError("field \"granularity\": " + std::string(granularity_name(*g)) + " where " +
                        std::string(granularity_name(d.granularity)) + " is expected");
      }
      d.granularity = *g;
      fixed = true;
      parse_line(j, d);
      // Validate this visit on its own.
      Dataset one;
      one.granularity = d.granularity;
      switch (d.granularity) {
        case Granularity::Complete:
          one.complete.push_back(d.complete.back());
          break;
        case Granularity::TransactionsTimed:
        case Granularity::Transactions:
          one.transactions.push_back(d.transactions.back());
          break;
        default:
          one.sales.push_back(d.sales.back());
      }
      one.check();
    } catch (const Json::exception& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      std::string message = e.what();
      if (message.rfind("visit 1: ", 0) == 0) message = message.substr(9);
      throw DataError(where + message);
    } catch (const DomainError& e) {
      throw DataError(where + e.what());
    }
  }
  return d;
}

Dataset read_dataset_file(const std::string& path, std::optional<Granularity> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  try {
    return read_dataset(in, expected);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run configuration

RunConfig section7_run_config() {
  RunConfig c;
  c.design = section7_preset();
  c.visits = 2000;
  c.seed = 1;
  c.granularity = Granularity::SalesNoNull;
  return c;
}

RunConfig parse_run_config(const Json& j) {
  require_fields(j,
                 {"horizon", "lambda", "include_null", "products", "visits", "seed", "granularity", "truncation",
                  "saa_samples"},
                 {"lambda", "products"}, "config: ");
  RunConfig c;
  c.design.horizon = j.contains("horizon") ? number_value(j.at("horizon"), "horizon") : 1.0;
  c.design.params.lambda = number_value(j.at("lambda"), "lambda");
  if (j.contains("include_null")) {
    if (!j.at("include_null").is_boolean()) throw DataError("config: field \"include_null\": expected a boolean");
    c.design.include_null = j.at("include_null").get<bool>();
  }
  if (!j.at("products").is_array() || j.at("products").empty()) {
    throw DataError("config: field \"products\": expected a non-empty array");
  }
  ProductId top = 0;
  std::vector<std::pair<ProductId, double>> weights;
  for (const Json& p : j.at("products")) {
    require_fields(p, {"id", "weight", "offer_probability", "stock"}, {"id", "weight"}, "config: field \"products\": ");
    ProductSpec spec;
    spec.id = id_value(p.at("id"), "products.id");
    if (p.contains("offer_probability")) {
      spec.offer_probability = number_value(p.at("offer_probability"), "products.offer_probability");
    }
    if (p.contains("stock") && !p.at("stock").is_null()) spec.stock = int_value(p.at("stock"), "products.stock");
    weights.emplace_back(spec.id, number_value(p.at("weight"), "products.weight"));
    top = std::max(top, spec.id);
    c.design.catalog.push_back(spec);
  }
  c.design.params.weights = Eigen::VectorXd::Ones(top + 1);
  for (const auto& [id, w] : weights) c.design.params.weights[id] = w;

  if (j.contains("visits")) {
    if (!j.at("visits").is_number_unsigned()) throw DataError("config: field \"visits\": expected a count");
    c.visits = j.at("visits").get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw DataError("config: field \"seed\": expected an unsigned integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("granularity")) {
    const auto g = j.at("granularity").is_string() ? parse_granularity(j.at("granularity").get<std::string>())
                                                   : std::nullopt;
    if (!g) throw DataError("config: field \"granularity\": unknown value " + j.at("granularity").dump());
    c.granularity = *g;
  } else {
    c.granularity = c.design.include_null ? Granularity::Sales : Granularity::SalesNoNull;
  }
  if (j.contains("truncation") && !j.at("truncation").is_null()) {
    c.truncation = int_value(j.at("truncation"), "truncation");
  }
  if (j.contains("saa_samples") && !j.at("saa_samples").is_null()) {
    if (!j.at("saa_samples").is_number_unsigned()) throw DataError("config: field \"saa_samples\": expected a count");
    c.saa_samples = j.at("saa_samples").get<std::uint64_t>();
  }
  const bool null_kind = c.granularity == Granularity::Sales;
  if ((null_kind && !c.design.include_null) || (c.granularity == Granularity::SalesNoNull && c.design.include_null)) {
    throw DataError("config: field \"granularity\": does not match \"include_null\"");
  }
  try {
    c.design.validate();
  } catch (const DomainError& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  try {
    return parse_run_config(Json::parse(in));
  } catch (const Json::exception& e) {
    throw DataError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

Json run_config_to_json(const RunConfig& c) {
  Json products = Json::array();
  for (const ProductSpec& p : c.design.catalog) {
    products.push_back({{"id", p.id},
                        {"weight", c.design.params.weights[p.id]},
                        {"offer_probability", p.offer_probability},
                        {"stock", p.stock == kUnlimitedStock ? Json(nullptr) : Json(p.stock)}});
  }
  return {{"horizon", c.design.horizon},
          {"lambda", c.design.params.lambda},
          {"include_null", c.design.include_null},
          {"products", products},
          {"visits", c.visits},
          {"seed", c.seed},
          {"granularity", granularity_name(c.granularity)},
          {"truncation", c.truncation ? Json(*c.truncation) : Json(nullptr)},
          {"saa_samples", c.saa_samples ? Json(*c.saa_samples) : Json(nullptr)}};
}

std::vector<double> design_probabilities(const VisitConfig& design, double* null_probability) {
  return catalog_probabilities(design.catalog_ids(), design.params, design.include_null, null_probability);
}

Json fit_result_to_json(const FitResult& r, const Json& config_echo) {
  Json probabilities = Json::object();
  Json theta = Json::object();
  for (std::size_t i = 0; i < r.products.size(); ++i) {
    probabilities[std::to_string(r.products[i])] = r.probabilities[i];
    theta[std::to_string(r.products[i])] = std::log(r.params.weights[r.products[i]]);
  }
  Json j = {{"estimator", r.estimator},
            {"granularity", granularity_name(r.granularity)},
            {"lambda_hat", r.params.lambda},
            {"probabilities", probabilities},
            {"theta_hat", theta},
            {"loglik", r.log_likelihood},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"config", config_echo}};
  if (r.includes_null) j["null_probability"] = r.null_probability;
  if (r.hidden_product) {
    j["hidden_product"] = *r.hidden_product;
    j["probabilities"][std::to_string(*r.hidden_product)] = r.null_probability;
  }
  j["saa"] = r.saa ? Json{{"samples_per_n", r.saa->samples_per_n}, {"seed", r.saa->seed}} : Json(nullptr);
  return j;
}

}  // namespace stockout
