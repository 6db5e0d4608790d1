#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "spcl/error.hpp"
#include "spcl/subdivision.hpp"

using namespace spcl;
using namespace spcl::subdivision;

namespace {

LabelMap block(std::size_t rows, std::size_t cols, std::size_t r0, std::size_t c0, std::size_t size, int value) {
  LabelMap m(rows, cols, 0);
  for (std::size_t r = r0; r < r0 + size; ++r)
    for (std::size_t c = c0; c < c0 + size; ++c) m.at(r, c) = value;
  return m;
}

std::size_t count(const BitMap& m) { return static_cast<std::size_t>(std::count(m.values.begin(), m.values.end(), 1)); }

LabelMap random_labels(std::size_t rows, std::size_t cols, int classes, std::mt19937_64& rng, bool with_ignore) {
  // blocky random maps so both regions occur
  LabelMap m(rows, cols, 0);
  std::uniform_int_distribution<int> pick(with_ignore ? -1 : 0, classes - 1);
  for (std::size_t r = 0; r < rows; r += 3)
    for (std::size_t c = 0; c < cols; c += 3) {
      const int v = pick(rng);
      for (std::size_t rr = r; rr < std::min(rows, r + 3); ++rr)
        for (std::size_t cc = c; cc < std::min(cols, c + 3); ++cc) m.at(rr, cc) = v;
    }
  return m;
}

}  // namespace

TEST_CASE("ring geometry examples") {
  SUBCASE("3x3 block in 5x5") {
    const auto map = extract_boundaries(block(5, 5, 1, 1, 3, 1), 2, 1);
    CHECK(count(map.boundary_mask(1)) == 8);
    CHECK(count(map.inner_mask(1)) == 1);
    CHECK(map.subclass_id.at(2, 2) == inner_subclass(1));
    CHECK(map.subclass_id.at(1, 1) == boundary_subclass(1));
  }
  SUBCASE("2x2 block in 4x4 has no interior") {
    const auto map = extract_boundaries(block(4, 4, 1, 1, 2, 1), 2, 1);
    CHECK(count(map.boundary_mask(1)) == 4);
    CHECK(count(map.inner_mask(1)) == 0);
  }
  SUBCASE("uniform map is all inner") {
    const auto map = extract_boundaries(LabelMap(6, 7, 2), 3, 1);
    CHECK(count(map.inner_mask(2)) == 42);
    CHECK(count(map.boundary_mask(2)) == 0);
  }
}

TEST_CASE("out-of-range labels and bad thickness are rejected") {
  LabelMap m(3, 3, 0);
  m.at(1, 2) = 4;
  CHECK_THROWS_AS(extract_boundaries(m, 4, 1), DataError);
  m.at(1, 2) = -3;
  CHECK_THROWS_AS(extract_boundaries(m, 4, 1), DataError);
  CHECK_THROWS_AS(extract_boundaries(LabelMap(2, 2, 0), 2, 0), ConfigError);
}

TEST_CASE("subclass masks partition every class mask") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int C = 2 + trial % 4;
    const auto labels = random_labels(12, 15, C, rng, trial % 2 == 0);
    const auto map = extract_boundaries(labels, static_cast<std::size_t>(C), 1 + trial % 3);
    std::size_t covered = 0, ignored = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) ignored += labels[i] == kIgnoreLabel;
    for (int c = 0; c < C; ++c) {
      const auto b = map.boundary_mask(c), in = map.inner_mask(c);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK_FALSE((b[i] && in[i]));
        CHECK(static_cast<bool>(b[i] || in[i]) == (labels[i] == c));
      }
      covered += count(b) + count(in);
    }
    CHECK(covered + ignored == labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == kIgnoreLabel) {
        CHECK(map.region[i] == Region::Ignore);
        CHECK(map.subclass_id[i] == kIgnoreSubclass);
      } else {
        CHECK(class_of(map.subclass_id[i]) == labels[i]);
      }
    }
  }
}

TEST_CASE("boundary grows monotonically with thickness") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto labels = random_labels(16, 16, 3, rng, false);
    for (std::size_t t = 1; t < 4; ++t) {
      const auto thin = extract_boundaries(labels, 3, t), thick = extract_boundaries(labels, 3, t + 1);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (thin.region[i] == Region::Boundary) CHECK(thick.region[i] == Region::Boundary);
      }
    }
  }
}

TEST_CASE("relabeling permutes the subclass masks") {
  std::mt19937_64 rng(8);
  const auto labels = random_labels(12, 12, 4, rng, false);
  std::vector<int> perm{2, 0, 3, 1};
  LabelMap permuted = labels;
  for (auto& v : permuted.values) v = perm[static_cast<std::size_t>(v)];
  const auto a = extract_boundaries(labels, 4, 1), b = extract_boundaries(permuted, 4, 1);
  for (int c = 0; c < 4; ++c) {
    CHECK(a.boundary_mask(c) == b.boundary_mask(perm[static_cast<std::size_t>(c)]));
    CHECK(a.inner_mask(c) == b.inner_mask(perm[static_cast<std::size_t>(c)]));
  }
}

TEST_CASE("unconcerned relation tables") {
  SUBCASE("C = 2") {
    const auto rel = build_relation(2, true);
    CHECK(rel.unconcerned(inner_subclass(1)) == std::vector<std::int32_t>{boundary_subclass(1)});
    CHECK(rel.negative_subclasses(inner_subclass(1)) == std::vector<std::int32_t>{inner_subclass(0), boundary_subclass(0)});
    CHECK(rel.positive_subclasses(inner_subclass(1)) == std::vector<std::int32_t>{inner_subclass(1)});
    CHECK_FALSE(rel.produces_anchors(inner_subclass(0)));
    CHECK(build_relation(2, false).produces_anchors(boundary_subclass(0)));
  }
  SUBCASE("C = 4 structure") {
    const auto rel = build_relation(4, true);
    CHECK(rel.subclass_count() == 8);
    for (std::int32_t s = 0; s < 8; ++s) {
      const auto& neg = rel.negative_subclasses(s);
      CHECK(neg.size() == 6);
      CHECK(std::find(neg.begin(), neg.end(), s) == neg.end());
      for (auto u : rel.unconcerned(s)) {
        CHECK(std::find(neg.begin(), neg.end(), u) == neg.end());
        const auto& back = rel.unconcerned(u);
        CHECK(std::find(back.begin(), back.end(), s) != back.end());
      }
      // every subclass of another class is a negative for s
      for (std::int32_t o = 0; o < 8; ++o) {
        if (class_of(o) != class_of(s)) CHECK(std::find(neg.begin(), neg.end(), o) != neg.end());
      }
    }
  }
  SUBCASE("Pos and Neg modes move the sibling") {
    const auto pos = build_relation(3, true, RelationMode::Positive);
    const auto neg = build_relation(3, true, RelationMode::Negative);
    CHECK(pos.positive_subclasses(2) == std::vector<std::int32_t>{2, 3});
    CHECK(pos.unconcerned(2).empty());
    const auto& n = neg.negative_subclasses(2);
    CHECK(std::find(n.begin(), n.end(), 3) != n.end());
    CHECK(n.size() == 5);
  }
  CHECK_THROWS_AS(build_relation(1, true), ConfigError);
  CHECK(parse_relation_mode("US") == RelationMode::Unconcerned);
  CHECK(parse_relation_mode("Neg") == RelationMode::Negative);
  CHECK_THROWS_AS(parse_relation_mode("maybe"), ConfigError);
}
