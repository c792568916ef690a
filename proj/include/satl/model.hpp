// Toy differentiable multi-label classifier: a linear score head or a single
// tanh hidden layer, with hand-written backpropagation.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "satl/rng.hpp"
#include "satl/types.hpp"

namespace satl {

enum class Architecture { kLinear, kOneHidden };

// Scores are clamped this far inside (0, 1) so downstream logs stay finite
// and a threshold of exactly 1.0 can never be exceeded.
inline constexpr Real kScoreClamp = 1e-12;

struct Classifier {
  Architecture arch = Architecture::kLinear;
  DenseMatrix<Real> hidden_weight;  // H x D (one-hidden only)
  DenseVector<Real> hidden_bias;    // H
  DenseMatrix<Real> output_weight;  // C x D (linear) or C x H
  DenseVector<Real> output_bias;    // C

  Index feature_dim() const {
    return arch == Architecture::kLinear ? output_weight.cols() : hidden_weight.cols();
  }
  Index n_categories() const { return output_weight.rows(); }
  Index parameter_count() const {
    return hidden_weight.size() + hidden_bias.size() + output_weight.size() + output_bias.size();
  }
};

inline Classifier make_classifier(Architecture arch, Index feature_dim, Index n_categories,
                                  Index hidden_dim, std::uint64_t seed) {
  if (feature_dim < 1 || n_categories < 1) {
    throw std::invalid_argument("make_classifier: dimensions must be positive");
  }
  Classifier model;
  model.arch = arch;
  auto engine = rng::make_engine(rng::derive_seed(seed, {0x4D4F44u}));
  auto fill_gaussian = [&engine](DenseMatrix<Real>& m, Real scale) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng::gaussian(engine);
    }
  };
  if (arch == Architecture::kOneHidden) {
    if (hidden_dim < 1) throw std::invalid_argument("make_classifier: hidden_dim must be positive");
    model.hidden_weight.resize(hidden_dim, feature_dim);
    fill_gaussian(model.hidden_weight, 1.0 / std::sqrt(static_cast<Real>(feature_dim)));
    model.hidden_bias = DenseVector<Real>::Zero(hidden_dim);
    model.output_weight.resize(n_categories, hidden_dim);
    fill_gaussian(model.output_weight, 1.0 / std::sqrt(static_cast<Real>(hidden_dim)));
  } else {
    model.hidden_weight.resize(0, 0);
    model.hidden_bias.resize(0);
    model.output_weight.resize(n_categories, feature_dim);
    fill_gaussian(model.output_weight, 1.0 / std::sqrt(static_cast<Real>(feature_dim)));
  }
  model.output_bias = DenseVector<Real>::Zero(n_categories);
  return model;
}

struct ForwardPass {
  DenseMatrix<Real> hidden;  // N x H tanh activations (empty for linear)
  DenseMatrix<Real> scores;  // N x C, each entry in (0, 1)
};

inline DenseMatrix<Real> forward_logits(const Classifier& model, const DenseMatrix<Real>& features,
                                        DenseMatrix<Real>* hidden_out = nullptr) {
  if (features.cols() != model.feature_dim()) {
    throw std::invalid_argument("forward: feature dimension does not match the model");
  }
  if (model.arch == Architecture::kLinear) {
    if (hidden_out) hidden_out->resize(0, 0);
    return (features * model.output_weight.transpose()).rowwise() +
           model.output_bias.transpose();
  }
  DenseMatrix<Real> hidden =
      ((features * model.hidden_weight.transpose()).rowwise() + model.hidden_bias.transpose())
          .array()
          .tanh()
          .matrix();
  DenseMatrix<Real> logits =
      (hidden * model.output_weight.transpose()).rowwise() + model.output_bias.transpose();
  if (hidden_out) *hidden_out = std::move(hidden);
  return logits;
}

inline DenseMatrix<Real> sigmoid_clamped(const DenseMatrix<Real>& logits) {
  return logits.unaryExpr([](Real z) {
    const Real p = 1.0 / (1.0 + std::exp(-z));
    return std::min(std::max(p, kScoreClamp), 1.0 - kScoreClamp);
  });
}

inline ForwardPass forward_pass(const Classifier& model, const DenseMatrix<Real>& features) {
  ForwardPass pass;
  pass.scores = sigmoid_clamped(forward_logits(model, features, &pass.hidden));
  return pass;
}

inline DenseMatrix<Real> forward(const Classifier& model, const DenseMatrix<Real>& features) {
  return forward_pass(model, features).scores;
}

struct ParameterGradients {
  DenseMatrix<Real> hidden_weight;
  DenseVector<Real> hidden_bias;
  DenseMatrix<Real> output_weight;
  DenseVector<Real> output_bias;
};

// Backpropagates a gradient with respect to the scores into the parameters.
// The forward pass must come from the same model/features pair.
inline ParameterGradients backward(const Classifier& model, const DenseMatrix<Real>& features,
                                   const ForwardPass& pass, const DenseMatrix<Real>& score_grad) {
  require_shape_match(score_grad.rows(), score_grad.cols(), pass.scores.rows(), pass.scores.cols(),
                      "backward");
  // dL/dz = dL/dp * p * (1 - p)
  DenseMatrix<Real> logit_grad =
      (score_grad.array() * pass.scores.array() * (1.0 - pass.scores.array())).matrix();
  ParameterGradients grads;
  if (model.arch == Architecture::kLinear) {
    grads.output_weight = logit_grad.transpose() * features;
    grads.output_bias = logit_grad.colwise().sum().transpose();
    grads.hidden_weight.resize(0, 0);
    grads.hidden_bias.resize(0);
    return grads;
  }
  grads.output_weight = logit_grad.transpose() * pass.hidden;
  grads.output_bias = logit_grad.colwise().sum().transpose();
  DenseMatrix<Real> hidden_grad = logit_grad * model.output_weight;  // N x H
  DenseMatrix<Real> pre_grad =
      (hidden_grad.array() * (1.0 - pass.hidden.array().square())).matrix();
  grads.hidden_weight = pre_grad.transpose() * features;
  grads.hidden_bias = pre_grad.colwise().sum().transpose();
  return grads;
}

// SGD step with momentum velocity buffers owned by the caller.
struct Velocity {
  DenseMatrix<Real> hidden_weight;
  DenseVector<Real> hidden_bias;
  DenseMatrix<Real> output_weight;
  DenseVector<Real> output_bias;
};

inline Velocity make_velocity(const Classifier& model) {
  Velocity v;
  v.hidden_weight = DenseMatrix<Real>::Zero(model.hidden_weight.rows(), model.hidden_weight.cols());
  v.hidden_bias = DenseVector<Real>::Zero(model.hidden_bias.size());
  v.output_weight = DenseMatrix<Real>::Zero(model.output_weight.rows(), model.output_weight.cols());
  v.output_bias = DenseVector<Real>::Zero(model.output_bias.size());
  return v;
}

inline void apply_gradients(Classifier& model, Velocity& velocity, const ParameterGradients& grads,
                            Real learning_rate, Real momentum) {
  auto step = [learning_rate, momentum](auto& param, auto& vel, const auto& grad) {
    if (param.size() == 0) return;
    vel = momentum * vel - learning_rate * grad;
    param += vel;
  };
  step(model.hidden_weight, velocity.hidden_weight, grads.hidden_weight);
  step(model.hidden_bias, velocity.hidden_bias, grads.hidden_bias);
  step(model.output_weight, velocity.output_weight, grads.output_weight);
  step(model.output_bias, velocity.output_bias, grads.output_bias);
}

}  // namespace satl
