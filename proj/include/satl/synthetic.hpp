// Controllable synthetic multi-label benchmark: prototype-based features with
// tunable class separation, prevalence and neighbor co-occurrence, plus the
// uniform label-masking protocol that turns full annotations into partial ones.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "satl/rng.hpp"
#include "satl/types.hpp"

namespace satl {

struct GeneratorConfig {
  Index n_samples = 5000;
  Index n_categories = 20;
  Index feature_dim = 64;
  Real separation = 3.0;          // expected distance between category prototypes
  std::vector<Real> prevalence;   // per-category P(y_c = +1), each in (0, 1)
  Real cooccurrence_strength = 0.0;  // [0, 1]; boosts P(+1) when the previous category is present
  Real noise_scale = 1.0;
  std::uint64_t seed = 1;
};

inline std::vector<Real> uniform_prevalence(Index n_categories, Real p) {
  return std::vector<Real>(static_cast<std::size_t>(n_categories), p);
}

// Long-tail profile: prevalence proportional to 1/(c+1), scaled by `base`.
inline std::vector<Real> long_tail_prevalence(Index n_categories, Real base) {
  std::vector<Real> out(static_cast<std::size_t>(n_categories));
  for (Index c = 0; c < n_categories; ++c) {
    out[static_cast<std::size_t>(c)] = base / static_cast<Real>(c + 1);
  }
  return out;
}

inline void validate(const GeneratorConfig& config) {
  if (config.n_samples < 1 || config.n_categories < 1 || config.feature_dim < 1) {
    throw std::invalid_argument("GeneratorConfig: dimensions must be positive");
  }
  if (config.separation < 0.0) throw std::invalid_argument("GeneratorConfig: separation must be >= 0");
  if (!(config.noise_scale > 0.0)) throw std::invalid_argument("GeneratorConfig: noise_scale must be > 0");
  if (!(config.cooccurrence_strength >= 0.0 && config.cooccurrence_strength <= 1.0)) {
    throw std::invalid_argument("GeneratorConfig: cooccurrence_strength must lie in [0, 1]");
  }
  if (static_cast<Index>(config.prevalence.size()) != config.n_categories) {
    throw std::invalid_argument("GeneratorConfig: prevalence must have one entry per category");
  }
  for (Real p : config.prevalence) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("GeneratorConfig: prevalence entries must lie in (0, 1)");
    }
  }
}

struct SyntheticDataset {
  DenseMatrix<Real> features;  // N x D
  LabelMatrix full_labels;     // fully annotated, entries are +/-1 only
  GeneratorConfig config;
};

// Deterministic given the seed. Features are the sum of the prototypes of the
// present categories plus isotropic Gaussian noise. Every category is
// guaranteed at least one positive and one negative sample; degenerate draws
// are retried with an incremented sub-seed, up to 100 attempts.
inline SyntheticDataset generate(const GeneratorConfig& config) {
  validate(config);
  const Index n = config.n_samples;
  const Index c_count = config.n_categories;
  const Index d = config.feature_dim;

  for (int attempt = 0; attempt < 100; ++attempt) {
    auto engine = rng::make_engine(
        rng::derive_seed(config.seed, {0x5A7Au, static_cast<std::uint64_t>(attempt)}));

    // Prototypes: i.i.d. Gaussian rows scaled so the expected pairwise
    // distance equals `separation`.
    DenseMatrix<Real> prototypes(c_count, d);
    const Real proto_scale = config.separation / std::sqrt(2.0 * static_cast<Real>(d));
    for (Index c = 0; c < c_count; ++c) {
      for (Index j = 0; j < d; ++j) prototypes(c, j) = proto_scale * rng::gaussian(engine);
    }

    LabelMatrix labels(n, c_count);
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < c_count; ++c) {
        Real p = config.prevalence[static_cast<std::size_t>(c)];
        if (c > 0 && labels(i, c - 1) == kPositiveLabel) {
          p += config.cooccurrence_strength * (1.0 - p);
        }
        labels(i, c) = rng::uniform01(engine) < p ? kPositiveLabel : kNegativeLabel;
      }
    }

    bool degenerate = false;
    for (Index c = 0; c < c_count && !degenerate; ++c) {
      const Index positives = (labels.col(c).array() == kPositiveLabel).count();
      if (positives == 0 || positives == n) degenerate = true;
    }
    if (degenerate) continue;

    DenseMatrix<Real> presence = (labels.array() == kPositiveLabel).cast<Real>().matrix();
    DenseMatrix<Real> features = presence * prototypes;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) features(i, j) += config.noise_scale * rng::gaussian(engine);
    }

    SyntheticDataset dataset;
    dataset.features = std::move(features);
    dataset.full_labels = std::move(labels);
    dataset.config = config;
    return dataset;
  }
  throw std::runtime_error("generate: no valid label draw in 100 attempts (degenerate config)");
}

// Uniform masking: each position independently keeps its label with
// probability known_proportion, otherwise becomes unknown. Never flips signs.
inline LabelMatrix mask_labels(const LabelMatrix& full, Real known_proportion,
                               std::uint64_t seed) {
  if (!(known_proportion > 0.0 && known_proportion <= 1.0)) {
    throw std::invalid_argument("mask_labels: known_proportion must lie in (0, 1]");
  }
  if ((full.array() == kUnknownLabel).any()) {
    throw std::invalid_argument("mask_labels: input must be fully annotated");
  }
  auto engine = rng::make_engine(rng::derive_seed(seed, {0x4D41534Bu}));
  LabelMatrix masked = full;
  for (Index i = 0; i < full.rows(); ++i) {
    for (Index c = 0; c < full.cols(); ++c) {
      if (!(rng::uniform01(engine) < known_proportion)) masked(i, c) = kUnknownLabel;
    }
  }
  return masked;
}

}  // namespace satl
