#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spcl/grid.hpp"

namespace spcl::metrics {

struct ClassOverlap {
  double dice = 0.0;
  double jaccard = 0.0;
};

// Per-class overlap for classes 0..num_classes-1. A class absent from both maps
// scores (1, 1); absent from exactly one scores (0, 0).
std::vector<ClassOverlap> dice_jaccard(const LabelMap& prediction, const LabelMap& reference, std::size_t num_classes);

// Mask pixels with at least one 4-neighbour outside the mask (image exterior counts as outside).
BitMap mask_boundary(const BitMap& mask);

// 95th percentile (nearest rank) of the distances from each boundary pixel of
// `from` to the closest boundary pixel of `to`.
double directed_hd95(const BitMap& from, const BitMap& to);

// max of both directed 95th percentiles; nullopt when either mask is empty.
std::optional<double> hd95(const BitMap& prediction, const BitMap& reference);

// Exact symmetric Hausdorff distance between the mask boundaries.
std::optional<double> hausdorff(const BitMap& prediction, const BitMap& reference);

BitMap class_mask(const LabelMap& labels, std::int32_t c);

struct ClassMetrics {
  double dice = 0.0;
  double jaccard = 0.0;
  double hd95 = 0.0;
  std::size_t hd95_count = 0;  // images where hd95 was defined
  bool hd95_defined = false;
};

struct SegMetrics {
  std::vector<ClassMetrics> per_class;  // indexed by class id; class 0 = background
  double dice = 0.0;                    // foreground macro means
  double jaccard = 0.0;
  double hd95 = 0.0;
  bool hd95_defined = false;
  std::size_t images = 0;
};

// Per-image metrics averaged over images, then over foreground classes 1..C-1.
// Images where hd95 is undefined for a class are left out of that class mean.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::size_t num_classes);
  void add(const LabelMap& prediction, const LabelMap& reference);
  SegMetrics result() const;

 private:
  std::size_t num_classes_;
  std::size_t images_ = 0;
  std::vector<double> dice_sum_;
  std::vector<double> jaccard_sum_;
  std::vector<double> hd_sum_;
  std::vector<std::size_t> hd_count_;
};

}  // namespace spcl::metrics
