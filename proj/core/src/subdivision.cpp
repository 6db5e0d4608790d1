#include "spcl/subdivision.hpp"

#include <algorithm>
#include <string>

#include "spcl/error.hpp"

namespace spcl::subdivision {

BitMap SubclassMap::boundary_mask(std::int32_t c) const {
  BitMap mask(rows(), cols(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = class_id[i] == c && region[i] == Region::Boundary;
  }
  return mask;
}

BitMap SubclassMap::inner_mask(std::int32_t c) const {
  BitMap mask(rows(), cols(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = class_id[i] == c && region[i] == Region::Inner;
  }
  return mask;
}

SubclassMap extract_boundaries(const LabelMap& labels, std::size_t num_classes, std::size_t thickness) {
  if (thickness < 1) throw ConfigError("extract_boundaries: thickness must be >= 1");
  const auto rows = labels.rows, cols = labels.cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = labels.at(r, c);
      if (v == kIgnoreLabel) continue;
      if (v < 0 || static_cast<std::size_t>(v) >= num_classes) {
        throw DataError("extract_boundaries: label " + std::to_string(v) + " at (" + std::to_string(r) + ", " +
                        std::to_string(c) + ") outside [0, " + std::to_string(num_classes) + ")");
      }
    }
  }

  SubclassMap map;
  map.num_classes = num_classes;
  map.region = Grid<Region>(rows, cols, Region::Ignore);
  map.class_id = Grid<std::int32_t>(rows, cols, kIgnoreLabel);
  map.subclass_id = Grid<std::int32_t>(rows, cols, kIgnoreSubclass);

  const auto t = static_cast<std::ptrdiff_t>(thickness);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = labels.at(r, c);
      if (v == kIgnoreLabel) continue;
      bool edge = false;
      const auto r0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(r) - t);
      const auto r1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(rows) - 1, static_cast<std::ptrdiff_t>(r) + t);
      const auto c0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(c) - t);
      const auto c1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(cols) - 1, static_cast<std::ptrdiff_t>(c) + t);
      for (auto rr = r0; rr <= r1 && !edge; ++rr) {
        for (auto cc = c0; cc <= c1; ++cc) {
          const auto n = labels.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
          if (n != kIgnoreLabel && n != v) {
            edge = true;
            break;
          }
        }
      }
      map.class_id.at(r, c) = v;
      map.region.at(r, c) = edge ? Region::Boundary : Region::Inner;
      map.subclass_id.at(r, c) = edge ? boundary_subclass(v) : inner_subclass(v);
    }
  }
  return map;
}

RelationMode parse_relation_mode(std::string_view text) {
  if (text == "US" || text == "us" || text == "unconcerned") return RelationMode::Unconcerned;
  if (text == "Pos" || text == "pos" || text == "positive") return RelationMode::Positive;
  if (text == "Neg" || text == "neg" || text == "negative") return RelationMode::Negative;
  throw ConfigError("unknown subclass relation '" + std::string(text) + "' (expected US, Pos or Neg)");
}

std::string_view to_string(RelationMode mode) {
  switch (mode) {
    case RelationMode::Unconcerned: return "US";
    case RelationMode::Positive: return "Pos";
    case RelationMode::Negative: return "Neg";
  }
  return "?";
}

UnconcernedRelation::UnconcernedRelation(std::size_t num_classes, bool exclude_background, RelationMode mode)
    : num_classes_(num_classes), exclude_background_(exclude_background), mode_(mode) {
  if (num_classes < 2) throw ConfigError("build_relation: need at least 2 classes");
  const auto total = static_cast<std::int32_t>(2 * num_classes);
  positives_.resize(static_cast<std::size_t>(total));
  negatives_.resize(static_cast<std::size_t>(total));
  unconcerned_.resize(static_cast<std::size_t>(total));
  for (std::int32_t s = 0; s < total; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    positives_[idx].push_back(s);
    for (std::int32_t o = 0; o < total; ++o) {
      if (class_of(o) != class_of(s)) negatives_[idx].push_back(o);
    }
    switch (mode) {
      case RelationMode::Unconcerned: unconcerned_[idx].push_back(sibling_of(s)); break;
      case RelationMode::Positive: positives_[idx].push_back(sibling_of(s)); break;
      case RelationMode::Negative: negatives_[idx].push_back(sibling_of(s)); break;
    }
    std::sort(positives_[idx].begin(), positives_[idx].end());
    std::sort(negatives_[idx].begin(), negatives_[idx].end());
  }
}

void UnconcernedRelation::check(std::int32_t subclass) const {
  if (subclass < 0 || static_cast<std::size_t>(subclass) >= subclass_count()) {
    throw ConfigError("relation: subclass " + std::to_string(subclass) + " out of range");
  }
}

const std::vector<std::int32_t>& UnconcernedRelation::positive_subclasses(std::int32_t subclass) const {
  check(subclass);
  return positives_[static_cast<std::size_t>(subclass)];
}

const std::vector<std::int32_t>& UnconcernedRelation::negative_subclasses(std::int32_t subclass) const {
  check(subclass);
  return negatives_[static_cast<std::size_t>(subclass)];
}

const std::vector<std::int32_t>& UnconcernedRelation::unconcerned(std::int32_t subclass) const {
  check(subclass);
  return unconcerned_[static_cast<std::size_t>(subclass)];
}

bool UnconcernedRelation::produces_anchors(std::int32_t subclass) const {
  check(subclass);
  return !(exclude_background_ && class_of(subclass) == 0);
}

UnconcernedRelation build_relation(std::size_t num_classes, bool exclude_background, RelationMode mode) {
  return UnconcernedRelation(num_classes, exclude_background, mode);
}

}  // namespace spcl::subdivision
