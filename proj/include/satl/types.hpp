// Core dense types for partially labeled multi-label data.
//
// Labels are ternary: -1 (known negative), 0 (unknown), +1 (known positive).
// Scores are probabilities strictly inside (0, 1). Both live in plain Eigen
// dense matrices; the functions here are the shared vocabulary of every other
// module.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace satl {

using Index = Eigen::Index;
using Real = double;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// N x C ternary label grid.
using LabelMatrix = DenseMatrix<std::int8_t>;
// N x C 0/1 grid (pseudo-label indicators, binarized predictions).
using BinaryGrid = DenseMatrix<std::uint8_t>;
using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr std::int8_t kNegativeLabel = -1;
inline constexpr std::int8_t kUnknownLabel = 0;
inline constexpr std::int8_t kPositiveLabel = 1;

inline void require_shape_match(Index rows_a, Index cols_a, Index rows_b, Index cols_b,
                                const char* context) {
  if (rows_a != rows_b || cols_a != cols_b) {
    std::ostringstream msg;
    msg << context << ": shape mismatch (" << rows_a << "x" << cols_a << " vs " << rows_b << "x"
        << cols_b << ")";
    throw std::invalid_argument(msg.str());
  }
}

inline bool is_ternary(const LabelMatrix& labels) {
  return ((labels.array() == -1) || (labels.array() == 0) || (labels.array() == 1)).all();
}

inline bool is_binary(const BinaryGrid& grid) {
  return ((grid.array() == 0) || (grid.array() == 1)).all();
}

// True where a score matrix satisfies the open-interval contract.
template <typename Derived>
bool scores_in_open_unit_interval(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  return ((scores.derived().array() > Scalar(0)) && (scores.derived().array() < Scalar(1))).all();
}

// True exactly where a label is known (non-zero).
inline BoolGrid known_mask(const LabelMatrix& labels) { return labels.array() != 0; }

// Per-sample count of known labels: sum_c |y_c|.
inline DenseVector<Index> known_count_per_row(const LabelMatrix& labels) {
  return labels.cast<Index>().cwiseAbs().rowwise().sum();
}

inline Index known_count(const LabelMatrix& labels) {
  return labels.cast<Index>().cwiseAbs().sum();
}

// Overlays positive pseudo-labels onto the unknown positions of a known grid.
// Known entries always win; promotions only ever produce +1.
inline LabelMatrix fuse_labels(const LabelMatrix& known, const BinaryGrid& pseudo) {
  require_shape_match(known.rows(), known.cols(), pseudo.rows(), pseudo.cols(), "fuse_labels");
  if (!is_binary(pseudo)) {
    throw std::invalid_argument("fuse_labels: pseudo grid must contain only 0/1 entries");
  }
  LabelMatrix fused = known;
  for (Index n = 0; n < known.rows(); ++n) {
    for (Index c = 0; c < known.cols(); ++c) {
      if (known(n, c) == kUnknownLabel && pseudo(n, c) == 1) {
        fused(n, c) = kPositiveLabel;
      }
    }
  }
  return fused;
}

}  // namespace satl
