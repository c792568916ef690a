// Positive pseudo-label generation at unknown positions and quality
// measurement against withheld ground truth.
#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "satl/threshold.hpp"
#include "satl/types.hpp"

namespace satl {

// 1 exactly where the label is unknown and the score strictly exceeds the
// category threshold; known positions are never pseudo-labeled.
template <typename Derived>
BinaryGrid generate_pseudo_labels(const Eigen::MatrixBase<Derived>& scores,
                                  const LabelMatrix& labels,
                                  const DenseVector<Real>& thresholds) {
  require_shape_match(scores.rows(), scores.cols(), labels.rows(), labels.cols(),
                      "generate_pseudo_labels");
  if (thresholds.size() != labels.cols()) {
    throw std::invalid_argument("generate_pseudo_labels: threshold count must equal categories");
  }
  BinaryGrid pseudo = BinaryGrid::Zero(labels.rows(), labels.cols());
  for (Index n = 0; n < labels.rows(); ++n) {
    for (Index c = 0; c < labels.cols(); ++c) {
      if (labels(n, c) == kUnknownLabel &&
          static_cast<Real>(scores.derived()(n, c)) > thresholds[c]) {
        pseudo(n, c) = 1;
      }
    }
  }
  return pseudo;
}

template <typename Derived>
BinaryGrid generate_pseudo_labels(const Eigen::MatrixBase<Derived>& scores,
                                  const LabelMatrix& labels, const ThresholdState& state) {
  return generate_pseudo_labels(scores, labels, state.thresholds);
}

struct CategoryPseudoStats {
  std::optional<Real> precision;  // absent when nothing was recalled
  std::optional<Real> recall;     // absent when no unknown positive exists
  Index recalled_count = 0;
  Index true_positive_count = 0;
};

struct PseudoLabelReport {
  std::vector<CategoryPseudoStats> per_category;
  // Means over categories with at least one recalled label.
  std::optional<Real> mean_precision;
  std::optional<Real> mean_recall;
  Index recalled_total = 0;
};

// Precision/recall of pseudo-labels per category, evaluated only at positions
// whose label is unknown in `labels`. `ground_truth` must be fully annotated.
inline PseudoLabelReport evaluate_pseudo_labels(const BinaryGrid& pseudo,
                                                const LabelMatrix& labels,
                                                const LabelMatrix& ground_truth) {
  require_shape_match(pseudo.rows(), pseudo.cols(), labels.rows(), labels.cols(),
                      "evaluate_pseudo_labels");
  require_shape_match(labels.rows(), labels.cols(), ground_truth.rows(), ground_truth.cols(),
                      "evaluate_pseudo_labels");
  if ((ground_truth.array() == kUnknownLabel).any()) {
    throw std::invalid_argument("evaluate_pseudo_labels: ground truth must contain no unknowns");
  }

  PseudoLabelReport report;
  report.per_category.resize(static_cast<std::size_t>(labels.cols()));
  Real precision_sum = 0.0;
  Real recall_sum = 0.0;
  Index precision_terms = 0;
  Index recall_terms = 0;

  for (Index c = 0; c < labels.cols(); ++c) {
    Index tp = 0, fp = 0, fn = 0;
    for (Index n = 0; n < labels.rows(); ++n) {
      if (labels(n, c) != kUnknownLabel) continue;  // only unknown positions count
      const bool predicted = pseudo(n, c) == 1;
      const bool positive = ground_truth(n, c) == kPositiveLabel;
      if (predicted && positive) ++tp;
      else if (predicted && !positive) ++fp;
      else if (!predicted && positive) ++fn;
    }
    auto& stats = report.per_category[static_cast<std::size_t>(c)];
    stats.recalled_count = tp + fp;
    stats.true_positive_count = tp;
    if (tp + fp > 0) stats.precision = static_cast<Real>(tp) / static_cast<Real>(tp + fp);
    if (tp + fn > 0) stats.recall = static_cast<Real>(tp) / static_cast<Real>(tp + fn);
    report.recalled_total += stats.recalled_count;
    if (stats.recalled_count > 0) {
      if (stats.precision) {
        precision_sum += *stats.precision;
        ++precision_terms;
      }
      if (stats.recall) {
        recall_sum += *stats.recall;
        ++recall_terms;
      }
    }
  }
  if (precision_terms > 0) report.mean_precision = precision_sum / static_cast<Real>(precision_terms);
  if (recall_terms > 0) report.mean_recall = recall_sum / static_cast<Real>(recall_terms);
  return report;
}

}  // namespace satl
