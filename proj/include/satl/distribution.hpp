// Per-category score distributions of known samples, empirical quantiles and
// histogram summaries for export.
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "satl/types.hpp"

namespace satl {

class EmptyDistributionError : public std::runtime_error {
 public:
  explicit EmptyDistributionError(const char* what) : std::runtime_error(what) {}
};

// Known-sample scores of one category, split by label sign.
struct ClassDistribution {
  Index category = 0;
  std::vector<Real> positive_scores;
  std::vector<Real> negative_scores;
};

struct HistogramSummary {
  std::vector<Real> bin_edges;                // size bins + 1, spans [0, 1]
  std::vector<std::int64_t> positive_counts;  // size bins
  std::vector<std::int64_t> negative_counts;  // size bins
};

// Collects scores at known positions, one distribution per category.
// Unknown positions contribute nothing; empty collections are allowed.
template <typename Derived>
std::vector<ClassDistribution> accumulate_known_scores(const Eigen::MatrixBase<Derived>& scores,
                                                       const LabelMatrix& labels) {
  require_shape_match(scores.rows(), scores.cols(), labels.rows(), labels.cols(),
                      "accumulate_known_scores");
  std::vector<ClassDistribution> dists(static_cast<std::size_t>(labels.cols()));
  for (Index c = 0; c < labels.cols(); ++c) {
    dists[static_cast<std::size_t>(c)].category = c;
  }
  for (Index n = 0; n < labels.rows(); ++n) {
    for (Index c = 0; c < labels.cols(); ++c) {
      auto& dist = dists[static_cast<std::size_t>(c)];
      if (labels(n, c) == kPositiveLabel) {
        dist.positive_scores.push_back(static_cast<Real>(scores.derived()(n, c)));
      } else if (labels(n, c) == kNegativeLabel) {
        dist.negative_scores.push_back(static_cast<Real>(scores.derived()(n, c)));
      }
    }
  }
  return dists;
}

// Lower empirical quantile on order statistics, no interpolation: the smallest
// sample value v such that (count of samples <= v) / n >= q. The result is
// always a member of the sample set; q = 0 yields the minimum.
inline Real empirical_quantile(std::span<const Real> samples, double q) {
  if (samples.empty()) {
    throw EmptyDistributionError("empirical_quantile: empty sample collection");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("empirical_quantile: q must lie in [0, 1]");
  }
  std::vector<Real> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (static_cast<double>(k + 1) / n >= q) return sorted[k];
  }
  return sorted.back();
}

inline Real empirical_quantile(const std::vector<Real>& samples, double q) {
  return empirical_quantile(std::span<const Real>(samples), q);
}

// Uniform-width bins over [0, 1]; the last bin is right-inclusive.
inline HistogramSummary histogram(const ClassDistribution& dist, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  HistogramSummary summary;
  summary.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    summary.bin_edges[static_cast<std::size_t>(i)] = static_cast<Real>(i) / bins;
  }
  summary.bin_edges.front() = 0.0;
  summary.bin_edges.back() = 1.0;
  summary.positive_counts.assign(static_cast<std::size_t>(bins), 0);
  summary.negative_counts.assign(static_cast<std::size_t>(bins), 0);
  auto bin_of = [bins](Real x) {
    auto b = static_cast<std::int64_t>(x * bins);
    return static_cast<std::size_t>(std::clamp<std::int64_t>(b, 0, bins - 1));
  };
  for (Real s : dist.positive_scores) ++summary.positive_counts[bin_of(s)];
  for (Real s : dist.negative_scores) ++summary.negative_counts[bin_of(s)];
  return summary;
}

}  // namespace satl
