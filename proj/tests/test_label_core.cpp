#include <doctest.h>

#include "satl/types.hpp"
#include "test_util.hpp"

using namespace satl;

namespace {

LabelMatrix from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.begin()->size());
  LabelMatrix m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (int v : row) m(i, j++) = static_cast<std::int8_t>(v);
    ++i;
  }
  return m;
}

BinaryGrid binary_from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.begin()->size());
  BinaryGrid m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (int v : row) m(i, j++) = static_cast<std::uint8_t>(v);
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("known_mask marks exactly the non-zero entries") {
  const LabelMatrix m = from_rows({{+1, 0, -1}});
  const BoolGrid mask = known_mask(m);
  CHECK(mask(0, 0));
  CHECK_FALSE(mask(0, 1));
  CHECK(mask(0, 2));

  CHECK_FALSE(known_mask(LabelMatrix::Zero(3, 4)).any());
  CHECK(known_mask(LabelMatrix::Constant(3, 4, 1)).all());
}

TEST_CASE("known_count_per_row counts non-zero entries") {
  const LabelMatrix m = from_rows({{+1, 0, -1}, {0, 0, 0}, {+1, +1, -1}});
  const auto counts = known_count_per_row(m);
  CHECK(counts(0) == 2);
  CHECK(counts(1) == 0);
  CHECK(counts(2) == 3);
  CHECK(known_count(m) == 5);
}

TEST_CASE("fuse_labels per-case behavior") {
  CHECK(fuse_labels(from_rows({{+1, 0, 0}}), binary_from_rows({{0, 1, 0}})) ==
        from_rows({{+1, +1, 0}}));
  // Known labels always win, even against a conflicting pseudo-label.
  CHECK(fuse_labels(from_rows({{-1}}), binary_from_rows({{1}})) == from_rows({{-1}}));
  CHECK(fuse_labels(from_rows({{0, 0}}), binary_from_rows({{0, 0}})) == from_rows({{0, 0}}));
}

TEST_CASE("fuse_labels rejects shape mismatch and non-binary grids") {
  CHECK_THROWS_AS(fuse_labels(LabelMatrix::Zero(2, 2), BinaryGrid::Zero(2, 3)),
                  std::invalid_argument);
  BinaryGrid bad = BinaryGrid::Zero(1, 1);
  bad(0, 0) = 2;
  CHECK_THROWS_AS(fuse_labels(LabelMatrix::Zero(1, 1), bad), std::invalid_argument);
}

TEST_CASE("fuse_labels properties over random matrices") {
  auto engine = rng::make_engine(42);
  for (int trial = 0; trial < 200; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng::uniform_index(engine, 6));
    const Index cols = 1 + static_cast<Index>(rng::uniform_index(engine, 6));
    const LabelMatrix known = testutil::random_ternary(rows, cols, engine);
    const BinaryGrid pseudo = testutil::random_binary(rows, cols, engine);
    const LabelMatrix fused = fuse_labels(known, pseudo);

    // Known entries are never changed; promotions only at unknowns, only to +1.
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        if (known(i, j) != kUnknownLabel) {
          CHECK(fused(i, j) == known(i, j));
        } else {
          CHECK(fused(i, j) == (pseudo(i, j) == 1 ? kPositiveLabel : kUnknownLabel));
        }
      }
    }
    CHECK(known_count(fused) >= known_count(known));
    // Idempotent under a second fusion with the same pseudo grid.
    CHECK(fuse_labels(fused, pseudo) == fused);
  }
}
