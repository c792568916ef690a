// Per-category threshold estimation: boundary quantiles of the known positive
// and negative score distributions, their max as the ideal threshold, and the
// exponential-moving-average update of the live thresholds.
#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>

#include "satl/distribution.hpp"
#include "satl/types.hpp"

namespace satl {

struct SateConfig {
  Real kappa_neg = 0.999;       // quantile level applied to known-negative scores
  Real kappa_pos = 0.1;         // quantile level applied to known-positive scores
  Real gamma = 0.3;             // EMA weight kept on the previous threshold
  Real initial_threshold = 1.0; // recalls nothing until the first update
  Index min_known_count = 10;   // per-side sample floor before an estimate is trusted
};

inline void validate(const SateConfig& config) {
  if (!(config.kappa_neg > 0.0 && config.kappa_neg < 1.0) ||
      !(config.kappa_pos > 0.0 && config.kappa_pos < 1.0)) {
    throw std::invalid_argument("SateConfig: kappa_neg and kappa_pos must lie in (0, 1)");
  }
  if (!(config.gamma > 0.0 && config.gamma < 1.0)) {
    throw std::invalid_argument("SateConfig: gamma must lie in (0, 1)");
  }
  if (!(config.initial_threshold > 0.0 && config.initial_threshold <= 1.0)) {
    throw std::invalid_argument("SateConfig: initial_threshold must lie in (0, 1]");
  }
  if (config.min_known_count < 1) {
    throw std::invalid_argument("SateConfig: min_known_count must be >= 1");
  }
}

struct BoundaryThresholds {
  Real tau_neg = 0.0;
  Real tau_pos = 0.0;
};

// Live per-category thresholds plus configuration and an epoch counter.
struct ThresholdState {
  DenseVector<Real> thresholds;  // each in (0, 1]
  SateConfig config;
  Index epoch = 0;
};

inline ThresholdState make_threshold_state(Index n_categories, const SateConfig& config) {
  validate(config);
  if (n_categories < 1) throw std::invalid_argument("make_threshold_state: need >= 1 category");
  ThresholdState state;
  state.config = config;
  state.thresholds = DenseVector<Real>::Constant(n_categories, config.initial_threshold);
  return state;
}

// Boundary quantiles of one category's known-score distributions. Returns
// nothing when either side has fewer than min_known_count samples; the caller
// skips the update and the category keeps its previous threshold.
inline std::optional<BoundaryThresholds> boundary_thresholds(const ClassDistribution& dist,
                                                             const SateConfig& config) {
  const auto min_count = static_cast<std::size_t>(config.min_known_count);
  if (dist.negative_scores.size() < min_count || dist.positive_scores.size() < min_count) {
    return std::nullopt;
  }
  BoundaryThresholds out;
  out.tau_neg = empirical_quantile(dist.negative_scores, config.kappa_neg);
  out.tau_pos = empirical_quantile(dist.positive_scores, config.kappa_pos);
  return out;
}

// Conservative pick between the two boundaries: in the separated regime the
// positive-side boundary wins, in the overlapped regime the negative-side
// boundary keeps the threshold high.
inline Real ideal_threshold(Real tau_neg, Real tau_pos) { return std::max(tau_neg, tau_pos); }

// tau <- gamma * tau + (1 - gamma) * tau_star, clamped into (0, 1]. Absent
// entries (insufficient data) leave their category untouched. Increments the
// epoch counter.
[[nodiscard]] inline ThresholdState update_thresholds(ThresholdState state,
                                                      std::span<const std::optional<Real>> ideal) {
  if (static_cast<Index>(ideal.size()) != state.thresholds.size()) {
    throw std::invalid_argument("update_thresholds: ideal vector length must equal category count");
  }
  const Real gamma = state.config.gamma;
  for (Index c = 0; c < state.thresholds.size(); ++c) {
    const auto& target = ideal[static_cast<std::size_t>(c)];
    if (!target.has_value()) continue;
    const Real updated = gamma * state.thresholds[c] + (1.0 - gamma) * *target;
    state.thresholds[c] = std::min(updated, 1.0);
  }
  ++state.epoch;
  return state;
}

}  // namespace satl
