#pragma once

#include <bit>
#include <concepts>

#include "stockout/model.hpp"
#include "stockout/numeric.hpp"

namespace stockout {

/// Choice probability P_{a:A}(beta) of a customer facing assortment A.
class ChoiceModel {
 public:
  virtual ~ChoiceModel() = default;

  /// Throws DomainError when `choice` is not offered by `assortment`.
  virtual double choice_prob(const ModelParams& params, const Choice& choice,
                             const Assortment& assortment) const = 0;

  virtual bool is_attraction() const { return false; }
};

/// Attraction model: P_a = f_a / ([1] + sum_{a' in A} f_a'), the bracketed 1
/// being the null alternative's weight when it is offered. Weights are used
/// directly, f_a(beta_a) = beta_a.
class AttractionModel final : public ChoiceModel {
 public:
  double choice_prob(const ModelParams& params, const Choice& choice,
                     const Assortment& assortment) const override;

  bool is_attraction() const override { return true; }

  /// d log P_{choice:assortment} / d beta_a for every a (zero outside the
  /// assortment). Indexed like params.weights.
  Eigen::VectorXd log_choice_prob_gradient(const ModelParams& params, const Choice& choice,
                                           const Assortment& assortment) const;
};

/// What the likelihood evaluators need from a choice model: log choice
/// probabilities against a running assortment given as a bitmask. Two models
/// satisfy it: AttractionProbabilities (any scalar, used for fitting) and
/// GenericProbabilities (wraps a ChoiceModel, double only).
template <typename P>
concept ChoiceProbabilities = requires(const P& p, ProductId a, ProductMask mask) {
  typename P::Scalar;
  { p.includes_null() } -> std::convertible_to<bool>;
  { p.log_prob(a, mask) } -> std::convertible_to<typename P::Scalar>;
  { p.log_null_prob(mask) } -> std::convertible_to<typename P::Scalar>;
};

template <typename ScalarT>
class AttractionProbabilities {
 public:
  using Scalar = ScalarT;

  AttractionProbabilities(const Vector<Scalar>& weights, bool includes_null)
      : weights_(weights), log_weights_(weights.size()), includes_null_(includes_null) {
    using std::log;
    for (Eigen::Index i = 0; i < weights.size(); ++i) log_weights_[i] = log(weights[i]);
  }

  bool includes_null() const { return includes_null_; }
  int size() const { return static_cast<int>(weights_.size()); }

  const Scalar& log_weight(ProductId a) const { return log_weights_[a]; }

  /// ([1] + sum of weights over `available`).
  Scalar denominator(ProductMask available) const {
    Scalar d = constant_like(weights_[0], includes_null_ ? 1.0 : 0.0);
    for (ProductMask m = available; m; m &= m - 1) d += weights_[std::countr_zero(m)];
    return d;
  }

  /// log of the denominator; -inf for an empty choice set.
  Scalar log_denominator(ProductMask available) const {
    using std::log;
    if (!includes_null_ && available == 0) return constant_like(weights_[0], kNegInf);
    return log(denominator(available));
  }

  Scalar log_prob(ProductId a, ProductMask available) const {
    if (!(available & product_bit(a))) return constant_like(weights_[0], kNegInf);
    return log_weights_[a] - log_denominator(available);
  }

  Scalar log_null_prob(ProductMask available) const {
    if (!includes_null_) return constant_like(weights_[0], kNegInf);
    return -log_denominator(available);
  }

 private:
  Vector<Scalar> weights_;
  Vector<Scalar> log_weights_;
  bool includes_null_;
};

/// Adapter exposing any ChoiceModel to the evaluators (double precision).
class GenericProbabilities {
 public:
  using Scalar = double;

  GenericProbabilities(const ChoiceModel& model, const ModelParams& params, bool includes_null)
      : model_(&model), params_(&params), includes_null_(includes_null) {}

  bool includes_null() const { return includes_null_; }
  double log_prob(ProductId a, ProductMask available) const;
  double log_null_prob(ProductMask available) const;

 private:
  Assortment assortment_of(ProductMask available) const;

  const ChoiceModel* model_;
  const ModelParams* params_;
  bool includes_null_;
};

static_assert(ChoiceProbabilities<AttractionProbabilities<double>>);
static_assert(ChoiceProbabilities<AttractionProbabilities<AutoDiff>>);
static_assert(ChoiceProbabilities<GenericProbabilities>);

}  // namespace stockout
