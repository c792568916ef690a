// Evaluation metrics: per-class average precision and mAP, the pooled and
// per-class F1 family, and the paired t statistic used for run comparisons.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "satl/types.hpp"

namespace satl {

// Average precision of one category: mean over positive ranks k (descending
// score order, ties kept in original index order) of precision-at-k. Absent
// when the truth vector has no positives.
inline std::optional<Real> average_precision(std::span<const Real> scores,
                                             std::span<const std::uint8_t> truth) {
  if (scores.size() != truth.size()) {
    throw std::invalid_argument("average_precision: scores and truth must have equal length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t positives_seen = 0;
  Real precision_sum = 0.0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (truth[order[rank]] != 0) {
      ++positives_seen;
      precision_sum += static_cast<Real>(positives_seen) / static_cast<Real>(rank + 1);
    }
  }
  if (positives_seen == 0) return std::nullopt;
  return precision_sum / static_cast<Real>(positives_seen);
}

struct F1Suite {
  std::optional<Real> overall_precision;    // pooled TP / pooled predicted
  std::optional<Real> per_class_precision;  // mean of per-class ratios
  std::optional<Real> overall_recall;
  std::optional<Real> per_class_recall;
  std::optional<Real> overall_f1;
  std::optional<Real> per_class_f1;
};

// Pooled OP/OR and per-class CP/CR (zero-denominator classes skipped), with
// their harmonic F1s. Metrics whose denominators vanish are reported absent.
inline F1Suite f1_suite(const BinaryGrid& pred, const BinaryGrid& truth) {
  require_shape_match(pred.rows(), pred.cols(), truth.rows(), truth.cols(), "f1_suite");
  std::int64_t pooled_tp = 0, pooled_pred = 0, pooled_truth = 0;
  Real cp_sum = 0.0, cr_sum = 0.0;
  Index cp_terms = 0, cr_terms = 0;
  for (Index c = 0; c < pred.cols(); ++c) {
    std::int64_t tp = 0, predicted = 0, actual = 0;
    for (Index n = 0; n < pred.rows(); ++n) {
      const bool p = pred(n, c) == 1;
      const bool t = truth(n, c) == 1;
      tp += p && t;
      predicted += p;
      actual += t;
    }
    pooled_tp += tp;
    pooled_pred += predicted;
    pooled_truth += actual;
    if (predicted > 0) {
      cp_sum += static_cast<Real>(tp) / static_cast<Real>(predicted);
      ++cp_terms;
    }
    if (actual > 0) {
      cr_sum += static_cast<Real>(tp) / static_cast<Real>(actual);
      ++cr_terms;
    }
  }
  F1Suite out;
  if (pooled_pred > 0) out.overall_precision = static_cast<Real>(pooled_tp) / static_cast<Real>(pooled_pred);
  if (pooled_truth > 0) out.overall_recall = static_cast<Real>(pooled_tp) / static_cast<Real>(pooled_truth);
  if (cp_terms > 0) out.per_class_precision = cp_sum / static_cast<Real>(cp_terms);
  if (cr_terms > 0) out.per_class_recall = cr_sum / static_cast<Real>(cr_terms);
  if (out.overall_precision && out.overall_recall &&
      *out.overall_precision + *out.overall_recall > 0.0) {
    out.overall_f1 = 2.0 * *out.overall_precision * *out.overall_recall /
                     (*out.overall_precision + *out.overall_recall);
  }
  if (out.per_class_precision && out.per_class_recall &&
      *out.per_class_precision + *out.per_class_recall > 0.0) {
    out.per_class_f1 = 2.0 * *out.per_class_precision * *out.per_class_recall /
                       (*out.per_class_precision + *out.per_class_recall);
  }
  return out;
}

struct EvalReport {
  std::vector<std::optional<Real>> per_class_ap;
  std::optional<Real> map;  // mean over categories with defined AP
  F1Suite f1;
  Real prediction_threshold = 0.5;
};

// Scores against fully annotated ternary truth: AP/mAP from the raw scores,
// F1 family from scores binarized at the prediction threshold (strict >).
template <typename Derived>
EvalReport evaluate_scores(const Eigen::MatrixBase<Derived>& scores, const LabelMatrix& truth,
                           Real prediction_threshold = 0.5) {
  require_shape_match(scores.rows(), scores.cols(), truth.rows(), truth.cols(), "evaluate_scores");
  const Index n = truth.rows();
  const Index c_count = truth.cols();
  EvalReport report;
  report.prediction_threshold = prediction_threshold;
  report.per_class_ap.resize(static_cast<std::size_t>(c_count));

  BinaryGrid pred(n, c_count), truth01(n, c_count);
  std::vector<Real> col_scores(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> col_truth(static_cast<std::size_t>(n));
  Real ap_sum = 0.0;
  Index ap_terms = 0;
  for (Index c = 0; c < c_count; ++c) {
    for (Index i = 0; i < n; ++i) {
      const Real s = static_cast<Real>(scores.derived()(i, c));
      col_scores[static_cast<std::size_t>(i)] = s;
      col_truth[static_cast<std::size_t>(i)] = truth(i, c) == kPositiveLabel ? 1 : 0;
      pred(i, c) = s > prediction_threshold ? 1 : 0;
      truth01(i, c) = col_truth[static_cast<std::size_t>(i)];
    }
    auto ap = average_precision(col_scores, col_truth);
    report.per_class_ap[static_cast<std::size_t>(c)] = ap;
    if (ap) {
      ap_sum += *ap;
      ++ap_terms;
    }
  }
  if (ap_terms > 0) report.map = ap_sum / static_cast<Real>(ap_terms);
  report.f1 = f1_suite(pred, truth01);
  return report;
}

struct PairedTTest {
  std::optional<Real> t_value;  // absent when the differences have zero variance
  Index n = 0;
  bool degenerate_signal = false;
};

// t = mean(d) / (sd(d) / sqrt(n)) with the (n-1)-denominator sample standard
// deviation. Zero variance is reported as a degenerate signal, not a number.
inline PairedTTest paired_t_test(std::span<const Real> differences) {
  const Index n = static_cast<Index>(differences.size());
  if (n < 2) throw std::invalid_argument("paired_t_test: need at least 2 paired differences");
  Real mean = 0.0;
  for (Real d : differences) mean += d;
  mean /= static_cast<Real>(n);
  Real ss = 0.0;
  for (Real d : differences) ss += (d - mean) * (d - mean);
  PairedTTest out;
  out.n = n;
  if (ss == 0.0) {
    out.degenerate_signal = true;
    return out;
  }
  const Real sd = std::sqrt(ss / static_cast<Real>(n - 1));
  out.t_value = mean / (sd / std::sqrt(static_cast<Real>(n)));
  return out;
}

}  // namespace satl
