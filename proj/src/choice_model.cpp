#include "stockout/choice_model.hpp"

#include <algorithm>
#include <cmath>

namespace stockout {

namespace {

void require_weights(const ModelParams& params, const Assortment& assortment) {
  for (ProductId a : assortment.products) {
    if (a >= params.weights.size()) throw DomainError("no weight for product " + std::to_string(a));
    if (!(params.weights[a] > 0.0)) throw DomainError("attraction weights must be positive");
  }
}

double denominator(const ModelParams& params, const Assortment& assortment) {
  double d = assortment.includes_null ? 1.0 : 0.0;
  for (ProductId a : assortment.products) d += params.weights[a];
  return d;
}

}  // namespace

double AttractionModel::choice_prob(const ModelParams& params, const Choice& choice,
                                    const Assortment& assortment) const {
  if (!assortment.offers(choice)) throw DomainError("choice not in the choice set");
  require_weights(params, assortment);
  const double d = denominator(params, assortment);
  return choice.is_null() ? 1.0 / d : params.weights[choice.product()] / d;
}

Eigen::VectorXd AttractionModel::log_choice_prob_gradient(const ModelParams& params,
                                                          const Choice& choice,
                                                          const Assortment& assortment) const {
  if (!assortment.offers(choice)) throw DomainError("choice not in the choice set");
  require_weights(params, assortment);
  const double d = denominator(params, assortment);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.weights.size());
  for (ProductId a : assortment.products) grad[a] = -1.0 / d;
  if (!choice.is_null()) grad[choice.product()] += 1.0 / params.weights[choice.product()];
  return grad;
}

Assortment GenericProbabilities::assortment_of(ProductMask available) const {
  std::vector<ProductId> ids;
  for (ProductMask m = available; m; m &= m - 1) ids.push_back(std::countr_zero(m));
  return Assortment(std::move(ids), includes_null_);
}

double GenericProbabilities::log_prob(ProductId a, ProductMask available) const {
  if (!(available & product_bit(a))) return kNegInf;
  return std::log(model_->choice_prob(*params_, Choice::product(a), assortment_of(available)));
}

double GenericProbabilities::log_null_prob(ProductMask available) const {
  if (!includes_null_) return kNegInf;
  return std::log(model_->choice_prob(*params_, Choice::null(), assortment_of(available)));
}

}  // namespace stockout
