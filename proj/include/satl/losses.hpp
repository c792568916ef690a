// Training objectives with analytical gradients with respect to the scores:
// per-sample-normalized partial BCE, the threshold-gap ranking loss, and their
// weighted combination.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "satl/types.hpp"

namespace satl {

template <typename Scalar>
struct LossResult {
  Scalar value = Scalar(0);
  DenseMatrix<Scalar> score_grad;  // dL/dp, same shape as the score matrix
};

struct LossBreakdown {
  Real cls_loss = 0.0;
  Real drl_loss = 0.0;
  Real total = 0.0;  // cls_loss + lambda * drl_loss, exactly
  Real lambda = 0.0;
};

// Binary cross entropy restricted to known labels, normalized per sample by
// the number of known labels, summed over samples. Rows with no known label
// contribute zero loss and zero gradient.
template <typename Derived>
LossResult<typename Derived::Scalar> partial_bce(const Eigen::MatrixBase<Derived>& scores,
                                                 const LabelMatrix& labels) {
  using Scalar = typename Derived::Scalar;
  require_shape_match(scores.rows(), scores.cols(), labels.rows(), labels.cols(), "partial_bce");
  LossResult<Scalar> result;
  result.score_grad = DenseMatrix<Scalar>::Zero(labels.rows(), labels.cols());
  for (Index n = 0; n < labels.rows(); ++n) {
    Index known = 0;
    for (Index c = 0; c < labels.cols(); ++c) known += labels(n, c) != 0;
    if (known == 0) continue;
    const Scalar inv_known = Scalar(1) / static_cast<Scalar>(known);
    for (Index c = 0; c < labels.cols(); ++c) {
      const Scalar p = scores.derived()(n, c);
      if (labels(n, c) == kPositiveLabel) {
        result.value -= inv_known * std::log(p);
        result.score_grad(n, c) = -inv_known / p;
      } else if (labels(n, c) == kNegativeLabel) {
        result.value -= inv_known * std::log(Scalar(1) - p);
        result.score_grad(n, c) = inv_known / (Scalar(1) - p);
      }
    }
  }
  return result;
}

// Hinge on the gap between a known sample's score and its category threshold:
// d = max(0, p - tau); the loss term is 1 - d for known positives and 1 + d
// for known negatives, summed over all known positions. Unknown positions
// contribute nothing. Thresholds are treated as constants; the subgradient at
// p == tau is zero.
template <typename Derived>
LossResult<typename Derived::Scalar> differential_ranking_loss(
    const Eigen::MatrixBase<Derived>& scores, const LabelMatrix& labels,
    const DenseVector<Real>& thresholds) {
  using Scalar = typename Derived::Scalar;
  require_shape_match(scores.rows(), scores.cols(), labels.rows(), labels.cols(),
                      "differential_ranking_loss");
  if (thresholds.size() != labels.cols()) {
    throw std::invalid_argument("differential_ranking_loss: threshold count must equal categories");
  }
  LossResult<Scalar> result;
  result.score_grad = DenseMatrix<Scalar>::Zero(labels.rows(), labels.cols());
  for (Index n = 0; n < labels.rows(); ++n) {
    for (Index c = 0; c < labels.cols(); ++c) {
      if (labels(n, c) == kUnknownLabel) continue;
      const Scalar p = scores.derived()(n, c);
      const Scalar tau = static_cast<Scalar>(thresholds[c]);
      const Scalar gap = p > tau ? p - tau : Scalar(0);
      if (labels(n, c) == kPositiveLabel) {
        result.value += Scalar(1) - gap;
        if (p > tau) result.score_grad(n, c) = Scalar(-1);
      } else {
        result.value += Scalar(1) + gap;
        if (p > tau) result.score_grad(n, c) = Scalar(1);
      }
    }
  }
  return result;
}

// Combined objective: partial BCE over the fused labels plus lambda times the
// ranking loss over the known labels only. Gradients add linearly.
template <typename Derived>
std::pair<LossBreakdown, DenseMatrix<typename Derived::Scalar>> satl_loss(
    const Eigen::MatrixBase<Derived>& scores, const LabelMatrix& fused_labels,
    const LabelMatrix& known_labels, const DenseVector<Real>& thresholds, Real lambda) {
  using Scalar = typename Derived::Scalar;
  if (lambda < 0.0) throw std::invalid_argument("satl_loss: lambda must be >= 0");
  require_shape_match(fused_labels.rows(), fused_labels.cols(), known_labels.rows(),
                      known_labels.cols(), "satl_loss");
  auto cls = partial_bce(scores, fused_labels);
  auto drl = differential_ranking_loss(scores, known_labels, thresholds);
  LossBreakdown breakdown;
  breakdown.cls_loss = static_cast<Real>(cls.value);
  breakdown.drl_loss = static_cast<Real>(drl.value);
  breakdown.lambda = lambda;
  breakdown.total = breakdown.cls_loss + lambda * breakdown.drl_loss;
  DenseMatrix<Scalar> grad =
      cls.score_grad + static_cast<Scalar>(lambda) * drl.score_grad;
  return {breakdown, std::move(grad)};
}

}  // namespace satl
