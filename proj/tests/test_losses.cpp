#include <doctest.h>

#include <cmath>

#include "satl/losses.hpp"
#include "test_util.hpp"

using namespace satl;

namespace {

Real sigmoid(Real z) { return 1.0 / (1.0 + std::exp(-z)); }

// Central finite differences on the logits: perturbs z, maps through the
// sigmoid, and re-evaluates the loss. Returns max relative error against the
// analytic chain dL/dz = dL/dp * p * (1 - p), skipping hinge-kink coordinates.
template <typename LossFn>
Real fd_logit_check(const DenseMatrix<Real>& logits, const LabelMatrix& labels,
                    const DenseVector<Real>& thresholds, LossFn loss_fn, Real step = 1e-5) {
  DenseMatrix<Real> scores = logits.unaryExpr([](Real z) { return sigmoid(z); });
  const auto base = loss_fn(scores);
  Real max_rel = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    for (Index j = 0; j < logits.cols(); ++j) {
      if (thresholds.size() > 0 && std::abs(scores(i, j) - thresholds[j]) < 1e-6) continue;
      DenseMatrix<Real> up = logits, down = logits;
      up(i, j) += step;
      down(i, j) -= step;
      const Real lu = loss_fn(up.unaryExpr([](Real z) { return sigmoid(z); })).value;
      const Real ld = loss_fn(down.unaryExpr([](Real z) { return sigmoid(z); })).value;
      const Real fd = (lu - ld) / (2.0 * step);
      const Real analytic = base.score_grad(i, j) * scores(i, j) * (1.0 - scores(i, j));
      const Real rel = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-4});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace

TEST_CASE("partial_bce worked example") {
  DenseMatrix<Real> scores(1, 3);
  scores << 0.9, 0.2, 0.5;
  LabelMatrix labels(1, 3);
  labels << 1, -1, 0;
  const auto result = partial_bce(scores, labels);
  const Real expected = -0.5 * (std::log(0.9) + std::log(0.8));
  CHECK(result.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(result.value == doctest::Approx(0.16425).epsilon(1e-4));
  CHECK(result.score_grad(0, 0) == doctest::Approx(-0.5 / 0.9).epsilon(1e-12));
  CHECK(result.score_grad(0, 1) == doctest::Approx(0.5 / 0.8).epsilon(1e-12));
  CHECK(result.score_grad(0, 2) == 0.0);
}

TEST_CASE("partial_bce near-perfect confidence and empty supervision") {
  DenseMatrix<Real> confident(1, 1);
  confident << 1.0 - 1e-9;
  LabelMatrix positive(1, 1);
  positive << 1;
  CHECK(partial_bce(confident, positive).value == doctest::Approx(0.0).epsilon(1e-8));

  DenseMatrix<Real> scores(1, 3);
  scores << 0.3, 0.6, 0.9;
  const auto result = partial_bce(scores, LabelMatrix::Zero(1, 3));
  CHECK(result.value == 0.0);
  CHECK(result.score_grad.isZero(0.0));
}

TEST_CASE("partial_bce is non-negative on random instances") {
  auto engine = rng::make_engine(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng::uniform_index(engine, 8));
    const Index cols = 1 + static_cast<Index>(rng::uniform_index(engine, 6));
    const auto scores = testutil::random_scores(rows, cols, engine);
    const auto labels = testutil::random_ternary(rows, cols, engine);
    CHECK(partial_bce(scores, labels).value >= 0.0);
  }
}

TEST_CASE("differential_ranking_loss per-case behavior") {
  DenseVector<Real> tau(1);
  tau << 0.6;

  DenseMatrix<Real> scores(1, 1);
  LabelMatrix labels(1, 1);

  scores << 0.8;
  labels << 1;
  auto result = differential_ranking_loss(scores, labels, tau);
  CHECK(result.value == doctest::Approx(0.8).epsilon(1e-12));  // 1 - 0.2
  CHECK(result.score_grad(0, 0) == -1.0);

  scores << 0.3;
  labels << -1;
  result = differential_ranking_loss(scores, labels, tau);
  CHECK(result.value == doctest::Approx(1.0).epsilon(1e-12));  // hinge inactive
  CHECK(result.score_grad(0, 0) == 0.0);

  scores << 0.9;
  labels << -1;
  result = differential_ranking_loss(scores, labels, tau);
  CHECK(result.value == doctest::Approx(1.3).epsilon(1e-12));  // 1 + 0.3
  CHECK(result.score_grad(0, 0) == 1.0);
}

TEST_CASE("differential_ranking_loss gradient sparsity") {
  auto engine = rng::make_engine(37);
  for (int trial = 0; trial < 100; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng::uniform_index(engine, 8));
    const Index cols = 1 + static_cast<Index>(rng::uniform_index(engine, 5));
    const auto scores = testutil::random_scores(rows, cols, engine);
    const auto labels = testutil::random_ternary(rows, cols, engine);
    DenseVector<Real> tau(cols);
    for (Index c = 0; c < cols; ++c) tau[c] = 0.1 + 0.8 * rng::uniform01(engine);
    const auto result = differential_ranking_loss(scores, labels, tau);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        if (labels(i, j) == kUnknownLabel || scores(i, j) <= tau[j]) {
          CHECK(result.score_grad(i, j) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("satl_loss composition identities") {
  auto engine = rng::make_engine(41);
  const auto scores = testutil::random_scores(6, 4, engine);
  const LabelMatrix known = testutil::random_ternary(6, 4, engine);
  LabelMatrix fused = known;
  for (Index i = 0; i < fused.rows(); ++i) {
    for (Index j = 0; j < fused.cols(); ++j) {
      if (fused(i, j) == kUnknownLabel && rng::uniform01(engine) < 0.4) fused(i, j) = kPositiveLabel;
    }
  }
  DenseVector<Real> tau(4);
  tau << 0.3, 0.5, 0.7, 0.9;

  // lambda = 0 reduces to the fused partial BCE.
  const auto [zero_breakdown, zero_grad] = satl_loss(scores, fused, known, tau, 0.0);
  const auto bce = partial_bce(scores, fused);
  CHECK(zero_breakdown.total == bce.value);
  CHECK((zero_grad - bce.score_grad).cwiseAbs().maxCoeff() == 0.0);

  // No pseudo-labels recalled: the cls term equals the known-label BCE.
  const auto [plain_breakdown, plain_grad] = satl_loss(scores, known, known, tau, 0.01);
  (void)plain_grad;
  CHECK(plain_breakdown.cls_loss == partial_bce(scores, known).value);

  // The total is the exact weighted sum, and scaling lambda scales the
  // ranking contribution linearly.
  const auto [breakdown, grad] = satl_loss(scores, fused, known, tau, 0.01);
  (void)grad;
  CHECK(breakdown.total == breakdown.cls_loss + 0.01 * breakdown.drl_loss);
  const auto [doubled, grad2] = satl_loss(scores, fused, known, tau, 0.02);
  (void)grad2;
  CHECK(doubled.total - doubled.cls_loss == doctest::Approx(2.0 * (breakdown.total - breakdown.cls_loss)).epsilon(1e-12));
}

TEST_CASE("loss gradients match central finite differences on the logits") {
  auto engine = rng::make_engine(43);
  Real worst_bce = 0.0, worst_drl = 0.0, worst_combined = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng::uniform_index(engine, 6));
    const Index cols = 1 + static_cast<Index>(rng::uniform_index(engine, 5));
    DenseMatrix<Real> logits(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) logits(i, j) = 2.0 * rng::gaussian(engine);
    }
    const LabelMatrix known = testutil::random_ternary(rows, cols, engine);
    LabelMatrix fused = known;
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        if (fused(i, j) == kUnknownLabel && rng::uniform01(engine) < 0.3) {
          fused(i, j) = kPositiveLabel;
        }
      }
    }
    DenseVector<Real> tau(cols);
    for (Index c = 0; c < cols; ++c) tau[c] = 0.05 + 0.9 * rng::uniform01(engine);

    worst_bce = std::max(
        worst_bce, fd_logit_check(logits, known, DenseVector<Real>{}, [&](const auto& p) {
          return partial_bce(p, known);
        }));
    worst_drl = std::max(worst_drl, fd_logit_check(logits, known, tau, [&](const auto& p) {
                           return differential_ranking_loss(p, known, tau);
                         }));
    worst_combined =
        std::max(worst_combined, fd_logit_check(logits, known, tau, [&](const auto& p) {
                   auto [breakdown, grad] = satl_loss(p, fused, known, tau, 0.01);
                   LossResult<Real> r;
                   r.value = breakdown.total;
                   r.score_grad = std::move(grad);
                   return r;
                 }));
  }
  CHECK(worst_bce < 1e-4);
  CHECK(worst_drl < 1e-4);
  CHECK(worst_combined < 1e-4);
}
