#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "spcl/grid.hpp"

namespace spcl::subdivision {

enum class Region : std::uint8_t { Inner, Boundary, Ignore };

// Label value marking pixels that belong to no class.
inline constexpr std::int32_t kIgnoreLabel = -1;
// Subclass id of an ignored pixel.
inline constexpr std::int32_t kIgnoreSubclass = -1;

constexpr std::int32_t inner_subclass(std::int32_t c) { return 2 * c; }
constexpr std::int32_t boundary_subclass(std::int32_t c) { return 2 * c + 1; }
constexpr std::int32_t class_of(std::int32_t subclass) { return subclass / 2; }
constexpr Region region_of(std::int32_t subclass) { return subclass % 2 == 0 ? Region::Inner : Region::Boundary; }
constexpr std::int32_t sibling_of(std::int32_t subclass) { return subclass ^ 1; }

struct SubclassMap {
  std::size_t num_classes = 0;
  Grid<Region> region;
  Grid<std::int32_t> class_id;     // kIgnoreLabel where ignored
  Grid<std::int32_t> subclass_id;  // 2c inner, 2c+1 boundary, kIgnoreSubclass where ignored

  std::size_t rows() const { return region.rows; }
  std::size_t cols() const { return region.cols; }
  std::size_t subclass_count() const { return 2 * num_classes; }

  BitMap boundary_mask(std::int32_t c) const;
  BitMap inner_mask(std::int32_t c) const;
};

// A pixel of class c is Boundary iff some pixel within Chebyshev distance
// <= thickness (inside the image) carries a different class label; otherwise
// Inner. Pixels labelled kIgnoreLabel become Ignore and never create a
// transition. Throws DataError on labels outside [0, num_classes).
SubclassMap extract_boundaries(const LabelMap& labels, std::size_t num_classes, std::size_t thickness = 1);

// How the two subclasses of one class treat each other.
enum class RelationMode {
  Unconcerned,  // sibling is neither positive nor negative
  Positive,     // sibling is an extra positive
  Negative,     // sibling is an extra negative
};

RelationMode parse_relation_mode(std::string_view text);
std::string_view to_string(RelationMode mode);

class UnconcernedRelation {
 public:
  UnconcernedRelation(std::size_t num_classes, bool exclude_background,
                      RelationMode mode = RelationMode::Unconcerned);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t subclass_count() const noexcept { return 2 * num_classes_; }
  RelationMode mode() const noexcept { return mode_; }

  std::int32_t positive_class(std::int32_t subclass) const { return class_of(subclass); }
  // Subclasses whose bank entries are positives for anchors of `subclass`.
  const std::vector<std::int32_t>& positive_subclasses(std::int32_t subclass) const;
  const std::vector<std::int32_t>& negative_subclasses(std::int32_t subclass) const;
  // Empty unless mode is Unconcerned.
  const std::vector<std::int32_t>& unconcerned(std::int32_t subclass) const;
  bool produces_anchors(std::int32_t subclass) const;

 private:
  void check(std::int32_t subclass) const;

  std::size_t num_classes_;
  bool exclude_background_;
  RelationMode mode_;
  std::vector<std::vector<std::int32_t>> positives_;
  std::vector<std::vector<std::int32_t>> negatives_;
  std::vector<std::vector<std::int32_t>> unconcerned_;
};

UnconcernedRelation build_relation(std::size_t num_classes, bool exclude_background,
                                   RelationMode mode = RelationMode::Unconcerned);

}  // namespace spcl::subdivision
