#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "spcl/error.hpp"
#include "spcl/metrics.hpp"

using namespace spcl;
using namespace spcl::metrics;

namespace {

BitMap square(std::size_t rows, std::size_t cols, std::size_t r0, std::size_t c0, std::size_t side) {
  BitMap m(rows, cols, 0);
  for (std::size_t r = r0; r < r0 + side; ++r)
    for (std::size_t c = c0; c < c0 + side; ++c) m.at(r, c) = 1;
  return m;
}

oracle::PixelSet to_set(const BitMap& m) {
  oracle::PixelSet s;
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c)
      if (m.at(r, c)) s.insert({static_cast<int>(r), static_cast<int>(c)});
  return s;
}

// Blob-like random mask: union of a few random rectangles.
BitMap random_mask(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  BitMap m(rows, cols, 0);
  std::uniform_int_distribution<std::size_t> pr(0, rows - 1), pc(0, cols - 1), len(1, 6), count(1, 3);
  for (std::size_t k = count(rng); k > 0; --k) {
    const std::size_t r0 = pr(rng), c0 = pc(rng), h = len(rng), w = len(rng);
    for (std::size_t r = r0; r < std::min(rows, r0 + h); ++r)
      for (std::size_t c = c0; c < std::min(cols, c0 + w); ++c) m.at(r, c) = 1;
  }
  return m;
}

}  // namespace

TEST_CASE("dice and jaccard examples") {
  LabelMap ref(2, 4, 0), pred(2, 4, 0);
  for (std::size_t c = 0; c < 4; ++c) ref.at(0, c) = 1;
  pred.at(0, 0) = pred.at(0, 1) = pred.at(1, 0) = pred.at(1, 1) = 1;
  const auto o = dice_jaccard(pred, ref, 2);
  CHECK(o[1].dice == doctest::Approx(0.5));
  CHECK(o[1].jaccard == doctest::Approx(1.0 / 3));

  const auto same = dice_jaccard(ref, ref, 3);
  CHECK(same[1].dice == 1.0);
  CHECK(same[2].dice == 1.0);  // absent from both
  CHECK(same[2].jaccard == 1.0);

  LabelMap disjoint(2, 4, 0);
  for (std::size_t c = 0; c < 4; ++c) disjoint.at(1, c) = 1;
  CHECK(dice_jaccard(disjoint, ref, 2)[1].dice == 0.0);

  LabelMap only_pred(2, 4, 0);
  only_pred.at(1, 1) = 2;
  CHECK(dice_jaccard(only_pred, ref, 3)[2].dice == 0.0);
  CHECK_THROWS_AS(dice_jaccard(LabelMap(2, 3, 0), ref, 2), ShapeError);
}

TEST_CASE("hd95 examples") {
  const auto a = square(10, 10, 2, 2, 3);
  CHECK(*hd95(a, a) == 0.0);
  CHECK(*hd95(a, square(10, 10, 2, 4, 3)) == doctest::Approx(2.0));
  CHECK_FALSE(hd95(a, BitMap(10, 10, 0)).has_value());
  CHECK_FALSE(hausdorff(BitMap(10, 10, 0), a).has_value());
  CHECK_THROWS_AS(hd95(a, BitMap(9, 10, 0)), ShapeError);
}

TEST_CASE("metrics agree with brute-force oracles on random masks") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 150; ++trial) {
    const auto p = random_mask(12, 14, rng), r = random_mask(12, 14, rng);
    const auto ps = to_set(p), rs = to_set(r);

    LabelMap lp(12, 14, 0), lr(12, 14, 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      lp[i] = p[i];
      lr[i] = r[i];
    }
    const auto got = dice_jaccard(lp, lr, 2)[1];
    const auto [d, j] = oracle::dice_jaccard(ps, rs);
    CHECK(std::abs(got.dice - d) < 1e-12);
    CHECK(std::abs(got.jaccard - j) < 1e-12);
    CHECK(std::abs(got.dice - 2 * got.jaccard / (1 + got.jaccard)) < 1e-12);

    const auto pb = oracle::framed_boundary(ps, 12, 14), rb = oracle::framed_boundary(rs, 12, 14);
    CHECK(to_set(mask_boundary(p)) == pb);
    const double h = *hd95(p, r);
    CHECK(std::abs(h - oracle::hd95(pb, rb)) < 1e-12);
    CHECK(h == *hd95(r, p));
    CHECK(h <= *hausdorff(p, r) + 1e-12);
    CHECK(std::abs(*hausdorff(p, r) - oracle::hausdorff(pb, rb)) < 1e-12);
  }
}

TEST_CASE("hd95 is translation invariant away from the frame") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_mask(10, 10, rng), r = random_mask(10, 10, rng);
    BitMap ps(30, 30, 0), rs(30, 30, 0), pt(30, 30, 0), rt(30, 30, 0);
    for (std::size_t y = 0; y < 10; ++y)
      for (std::size_t x = 0; x < 10; ++x) {
        ps.at(y + 2, x + 2) = p.at(y, x);
        rs.at(y + 2, x + 2) = r.at(y, x);
        pt.at(y + 15, x + 11) = p.at(y, x);
        rt.at(y + 15, x + 11) = r.at(y, x);
      }
    CHECK(*hd95(ps, rs) == *hd95(pt, rt));
  }
}

TEST_CASE("accumulator averages images then foreground classes") {
  MetricAccumulator acc(3);
  LabelMap ref(4, 4, 0);
  ref.at(0, 0) = ref.at(0, 1) = 1;
  ref.at(3, 3) = 2;
  acc.add(ref, ref);  // perfect
  LabelMap wrong = ref;
  wrong.at(3, 3) = 0;  // class 2 missed
  acc.add(wrong, ref);
  const auto m = acc.result();
  CHECK(m.images == 2);
  CHECK(m.per_class[1].dice == 1.0);
  CHECK(m.per_class[2].dice == doctest::Approx(0.5));
  CHECK(m.dice == doctest::Approx(0.75));
  CHECK(m.per_class[2].hd95_count == 1);  // undefined on the second image
  CHECK(m.per_class[2].hd95 == 0.0);
  CHECK(m.hd95_defined);
  CHECK_THROWS_AS(MetricAccumulator(1), ConfigError);
}
