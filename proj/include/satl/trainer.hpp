// Two-stage training loop: a warmup stage on known labels only, then
// per-epoch threshold estimation, pseudo-label fusion and combined-loss
// descent. Also hosts the finite-difference gradient check used to validate
// the hand-written backpropagation.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "satl/losses.hpp"
#include "satl/metrics.hpp"
#include "satl/model.hpp"
#include "satl/pseudo_label.hpp"
#include "satl/synthetic.hpp"
#include "satl/threshold.hpp"

namespace satl {

enum class ThresholdMode { kSate, kFixed, kLinearDecay };

struct ThresholdPolicy {
  ThresholdMode mode = ThresholdMode::kSate;
  Real fixed_value = 0.9;   // kFixed: constant stage-2 threshold for all categories
  Real decay_start = 0.9;   // kLinearDecay: global threshold ramps from start to end
  Real decay_end = 0.6;
};

struct TrainConfig {
  Real lr_stage1 = 0.1;
  Real lr_stage2 = 0.05;
  Index stage1_epochs = 10;  // warmup epochs trained on known labels only
  Index total_epochs = 60;   // overall epoch count; stage 2 covers the remainder
  Index batch_size = 64;
  SateConfig sate;
  Real lambda = 0.01;  // weight of the ranking loss in stage 2
  ThresholdPolicy threshold;
  Real momentum = 0.0;  // optional heavy-ball term
  Architecture arch = Architecture::kLinear;
  Index hidden_dim = 32;
  Real holdout_fraction = 0.2;      // validation tail used for mAP/F1 tracking
  Real prediction_threshold = 0.5;  // F1 binarization point
  std::uint64_t seed = 1;
};

// Default EMA momentum keyed to the known-label proportion.
inline Real auto_gamma(Real known_proportion) { return known_proportion <= 0.3 ? 0.3 : 0.5; }

inline void validate(const TrainConfig& config) {
  validate(config.sate);
  if (!(config.lr_stage1 > 0.0 && config.lr_stage2 > 0.0)) {
    throw std::invalid_argument("TrainConfig: learning rates must be positive");
  }
  if (config.stage1_epochs < 1 || config.stage1_epochs >= config.total_epochs) {
    throw std::invalid_argument("TrainConfig: need 1 <= stage1_epochs < total_epochs");
  }
  if (config.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (config.lambda < 0.0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  }
  if (!(config.holdout_fraction >= 0.0 && config.holdout_fraction < 1.0)) {
    throw std::invalid_argument("TrainConfig: holdout_fraction must lie in [0, 1)");
  }
}

struct EpochRecord {
  Index epoch = 0;  // 1-based
  int stage = 1;
  Real cls_loss = 0.0;
  Real drl_loss = 0.0;
  Real total_loss = 0.0;
  DenseVector<Real> thresholds;  // live thresholds used for this epoch's pseudo-labels
  std::vector<std::optional<Real>> tau_neg;   // per category; present in SATE stage-2 epochs
  std::vector<std::optional<Real>> tau_pos;
  std::vector<std::optional<Real>> tau_star;
  Index recalled_total = 0;
  PseudoLabelReport pseudo;
  EvalReport eval;  // holdout metrics against full ground truth
};

struct TrainRun {
  TrainConfig config;
  std::vector<EpochRecord> records;  // one per epoch, in epoch order
  Classifier model;
  DenseVector<Real> final_thresholds;
  Index train_rows = 0;
  Index holdout_rows = 0;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(Index epoch, const std::string& what)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}
  Index epoch() const { return epoch_; }

 private:
  Index epoch_ = 0;
};

inline std::vector<ClassDistribution> known_score_distributions(const Classifier& model,
                                                                const DenseMatrix<Real>& features,
                                                                const LabelMatrix& labels) {
  return accumulate_known_scores(forward(model, features), labels);
}

// Epoch with the best validation mAP (earliest on ties); 0 when no epoch has a
// defined mAP. Returns an index into run.records.
inline std::size_t best_epoch_index(const TrainRun& run) {
  std::size_t best = 0;
  Real best_map = -1.0;
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const auto& map = run.records[i].eval.map;
    if (map && *map > best_map) {
      best_map = *map;
      best = i;
    }
  }
  return best;
}

inline TrainRun train(const SyntheticDataset& dataset, const LabelMatrix& masked,
                      const TrainConfig& config) {
  validate(config);
  const Index n = dataset.features.rows();
  const Index c_count = dataset.full_labels.cols();
  require_shape_match(masked.rows(), masked.cols(), n, c_count, "train: masked labels");
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < c_count; ++c) {
      if (masked(i, c) != kUnknownLabel && masked(i, c) != dataset.full_labels(i, c)) {
        throw std::invalid_argument("train: masked labels must agree with the full labels");
      }
    }
  }

  const Index holdout = static_cast<Index>(std::llround(config.holdout_fraction * static_cast<Real>(n)));
  const Index n_train = n - holdout;
  if (n_train < 1) throw std::invalid_argument("train: holdout leaves no training rows");

  const DenseMatrix<Real> train_features = dataset.features.topRows(n_train);
  const LabelMatrix train_masked = masked.topRows(n_train);
  const LabelMatrix train_full = dataset.full_labels.topRows(n_train);
  const DenseMatrix<Real> val_features = dataset.features.bottomRows(holdout);
  const LabelMatrix val_full = dataset.full_labels.bottomRows(holdout);

  TrainRun run;
  run.config = config;
  run.train_rows = n_train;
  run.holdout_rows = holdout;
  run.model = make_classifier(config.arch, dataset.features.cols(), c_count, config.hidden_dim,
                              rng::derive_seed(config.seed, {1}));
  Velocity velocity = make_velocity(run.model);
  auto order_engine = rng::make_engine(rng::derive_seed(config.seed, {2}));

  ThresholdState threshold_state = make_threshold_state(c_count, config.sate);
  DenseVector<Real> tau = threshold_state.thresholds;
  const Index stage2_epochs = config.total_epochs - config.stage1_epochs;

  std::vector<Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Index{0});

  for (Index epoch = 1; epoch <= config.total_epochs; ++epoch) {
    const bool stage2 = epoch > config.stage1_epochs;
    EpochRecord record;
    record.epoch = epoch;
    record.stage = stage2 ? 2 : 1;

    const DenseMatrix<Real> scores = forward(run.model, train_features);

    if (stage2) {
      switch (config.threshold.mode) {
        case ThresholdMode::kSate: {
          const auto dists = accumulate_known_scores(scores, train_masked);
          std::vector<std::optional<Real>> ideal(static_cast<std::size_t>(c_count));
          record.tau_neg.resize(static_cast<std::size_t>(c_count));
          record.tau_pos.resize(static_cast<std::size_t>(c_count));
          record.tau_star.resize(static_cast<std::size_t>(c_count));
          for (Index c = 0; c < c_count; ++c) {
            const auto idx = static_cast<std::size_t>(c);
            if (auto bounds = boundary_thresholds(dists[idx], config.sate)) {
              record.tau_neg[idx] = bounds->tau_neg;
              record.tau_pos[idx] = bounds->tau_pos;
              record.tau_star[idx] = ideal_threshold(bounds->tau_neg, bounds->tau_pos);
              ideal[idx] = record.tau_star[idx];
            }
          }
          threshold_state = update_thresholds(std::move(threshold_state), ideal);
          tau = threshold_state.thresholds;
          break;
        }
        case ThresholdMode::kFixed:
          tau.setConstant(config.threshold.fixed_value);
          break;
        case ThresholdMode::kLinearDecay: {
          const Index s2_index = epoch - config.stage1_epochs;  // 1..stage2_epochs
          const Real fraction = stage2_epochs > 1
                                    ? static_cast<Real>(s2_index - 1) / static_cast<Real>(stage2_epochs - 1)
                                    : 1.0;
          tau.setConstant(config.threshold.decay_start +
                          (config.threshold.decay_end - config.threshold.decay_start) * fraction);
          break;
        }
      }
    }
    record.thresholds = tau;

    BinaryGrid pseudo = stage2 ? generate_pseudo_labels(scores, train_masked, tau)
                               : BinaryGrid::Zero(n_train, c_count);
    const LabelMatrix fused = stage2 ? fuse_labels(train_masked, pseudo) : train_masked;

    if (stage2) {
      auto [breakdown, grad] = satl_loss(scores, fused, train_masked, tau, config.lambda);
      (void)grad;
      record.cls_loss = breakdown.cls_loss;
      record.drl_loss = breakdown.drl_loss;
      record.total_loss = breakdown.total;
    } else {
      auto bce = partial_bce(scores, train_masked);
      record.cls_loss = bce.value;
      record.drl_loss = 0.0;
      record.total_loss = bce.value;
    }
    if (!std::isfinite(record.total_loss)) {
      throw TrainingDivergedError(epoch, "non-finite loss");
    }

    record.pseudo = evaluate_pseudo_labels(pseudo, train_masked, train_full);
    record.recalled_total = record.pseudo.recalled_total;
    if (holdout > 0) {
      record.eval =
          evaluate_scores(forward(run.model, val_features), val_full, config.prediction_threshold);
    } else {
      record.eval.prediction_threshold = config.prediction_threshold;
    }
    run.records.push_back(std::move(record));

    // Mini-batch descent on this epoch's objective (labels and thresholds are
    // frozen for the epoch; scores are recomputed per batch).
    rng::shuffle(order, order_engine);
    const Real lr = stage2 ? config.lr_stage2 : config.lr_stage1;
    for (Index start = 0; start < n_train; start += config.batch_size) {
      const Index count = std::min<Index>(config.batch_size, n_train - start);
      std::vector<Index> batch(order.begin() + start, order.begin() + start + count);
      const DenseMatrix<Real> x = train_features(batch, Eigen::all);
      const ForwardPass pass = forward_pass(run.model, x);
      DenseMatrix<Real> score_grad;
      if (stage2) {
        const LabelMatrix batch_fused = fused(batch, Eigen::all);
        const LabelMatrix batch_known = train_masked(batch, Eigen::all);
        auto [breakdown, grad] = satl_loss(pass.scores, batch_fused, batch_known, tau, config.lambda);
        (void)breakdown;
        score_grad = std::move(grad);
      } else {
        const LabelMatrix batch_known = train_masked(batch, Eigen::all);
        score_grad = partial_bce(pass.scores, batch_known).score_grad;
      }
      score_grad /= static_cast<Real>(count);
      const ParameterGradients grads = backward(run.model, x, pass, score_grad);
      apply_gradients(run.model, velocity, grads, lr, config.momentum);
    }
  }

  run.final_thresholds = tau;
  return run;
}

enum class LossKind { kPartialBce, kRanking, kCombined };

// Max relative error between analytical parameter gradients and central
// finite differences. Intended for small batches.
inline Real gradient_check(const Classifier& model, const DenseMatrix<Real>& features,
                           const LabelMatrix& fused, const LabelMatrix& known,
                           const DenseVector<Real>& thresholds, Real lambda, LossKind kind,
                           Real step = 1e-5) {
  auto loss_of = [&](const Classifier& m) -> Real {
    const DenseMatrix<Real> p = forward(m, features);
    switch (kind) {
      case LossKind::kPartialBce:
        return partial_bce(p, fused).value;
      case LossKind::kRanking:
        return differential_ranking_loss(p, known, thresholds).value;
      case LossKind::kCombined:
        return satl_loss(p, fused, known, thresholds, lambda).first.total;
    }
    return 0.0;
  };
  const ForwardPass pass = forward_pass(model, features);
  DenseMatrix<Real> score_grad;
  switch (kind) {
    case LossKind::kPartialBce:
      score_grad = partial_bce(pass.scores, fused).score_grad;
      break;
    case LossKind::kRanking:
      score_grad = differential_ranking_loss(pass.scores, known, thresholds).score_grad;
      break;
    case LossKind::kCombined:
      score_grad = satl_loss(pass.scores, fused, known, thresholds, lambda).second;
      break;
  }
  const ParameterGradients analytic = backward(model, features, pass, score_grad);

  Classifier probe = model;
  Real max_rel_error = 0.0;
  auto check_block = [&](auto& param, const auto& grad_block) {
    for (Index i = 0; i < param.size(); ++i) {
      const Real saved = param(i);
      param(i) = saved + step;
      const Real up = loss_of(probe);
      param(i) = saved - step;
      const Real down = loss_of(probe);
      param(i) = saved;
      const Real fd = (up - down) / (2.0 * step);
      const Real a = grad_block(i);
      const Real rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), Real(1e-4)});
      max_rel_error = std::max(max_rel_error, rel);
    }
  };
  check_block(probe.hidden_weight, analytic.hidden_weight);
  check_block(probe.hidden_bias, analytic.hidden_bias);
  check_block(probe.output_weight, analytic.output_weight);
  check_block(probe.output_bias, analytic.output_bias);
  return max_rel_error;
}

}  // namespace satl
