#include "spcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spcl/error.hpp"

namespace spcl::metrics {
namespace {

struct Point {
  double r;
  double c;
};

std::vector<Point> boundary_points(const BitMap& mask) {
  const auto b = mask_boundary(mask);
  std::vector<Point> pts;
  for (std::size_t r = 0; r < b.rows; ++r) {
    for (std::size_t c = 0; c < b.cols; ++c) {
      if (b.at(r, c)) pts.push_back({static_cast<double>(r), static_cast<double>(c)});
    }
  }
  return pts;
}

std::vector<double> directed_distances(const std::vector<Point>& from, const std::vector<Point>& to) {
  std::vector<double> d;
  d.reserve(from.size());
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      const double dr = p.r - q.r, dc = p.c - q.c;
      best = std::min(best, dr * dr + dc * dc);
    }
    d.push_back(std::sqrt(best));
  }
  return d;
}

double nearest_rank_95(std::vector<double> d) {
  std::sort(d.begin(), d.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size())));
  return d[std::max<std::size_t>(rank, 1) - 1];
}

bool empty(const BitMap& m) {
  return std::none_of(m.values.begin(), m.values.end(), [](std::uint8_t v) { return v != 0; });
}

void require_same_shape(const auto& a, const auto& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError(std::string(what) + ": shape " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                     std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
}

}  // namespace

std::vector<ClassOverlap> dice_jaccard(const LabelMap& prediction, const LabelMap& reference, std::size_t num_classes) {
  require_same_shape(prediction, reference, "dice_jaccard");
  std::vector<std::size_t> pred(num_classes, 0), ref(num_classes, 0), both(num_classes, 0);
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const auto p = prediction[i], r = reference[i];
    if (p >= 0 && static_cast<std::size_t>(p) < num_classes) ++pred[static_cast<std::size_t>(p)];
    if (r >= 0 && static_cast<std::size_t>(r) < num_classes) ++ref[static_cast<std::size_t>(r)];
    if (p == r && p >= 0 && static_cast<std::size_t>(p) < num_classes) ++both[static_cast<std::size_t>(p)];
  }
  std::vector<ClassOverlap> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (pred[c] == 0 && ref[c] == 0) {
      out[c] = {1.0, 1.0};
      continue;
    }
    const double inter = static_cast<double>(both[c]);
    const double total = static_cast<double>(pred[c] + ref[c]);
    out[c] = {2.0 * inter / total, inter / (total - inter)};
  }
  return out;
}

BitMap mask_boundary(const BitMap& mask) {
  BitMap out(mask.rows, mask.cols, 0);
  for (std::size_t r = 0; r < mask.rows; ++r) {
    for (std::size_t c = 0; c < mask.cols; ++c) {
      if (!mask.at(r, c)) continue;
      const bool edge = r == 0 || c == 0 || r + 1 == mask.rows || c + 1 == mask.cols || !mask.at(r - 1, c) ||
                        !mask.at(r + 1, c) || !mask.at(r, c - 1) || !mask.at(r, c + 1);
      out.at(r, c) = edge;
    }
  }
  return out;
}

double directed_hd95(const BitMap& from, const BitMap& to) {
  require_same_shape(from, to, "hd95");
  const auto a = boundary_points(from), b = boundary_points(to);
  if (a.empty() || b.empty()) throw DataError("hd95: empty mask");
  return nearest_rank_95(directed_distances(a, b));
}

std::optional<double> hd95(const BitMap& prediction, const BitMap& reference) {
  require_same_shape(prediction, reference, "hd95");
  if (empty(prediction) || empty(reference)) return std::nullopt;
  return std::max(directed_hd95(prediction, reference), directed_hd95(reference, prediction));
}

std::optional<double> hausdorff(const BitMap& prediction, const BitMap& reference) {
  require_same_shape(prediction, reference, "hausdorff");
  if (empty(prediction) || empty(reference)) return std::nullopt;
  const auto a = boundary_points(prediction), b = boundary_points(reference);
  const auto ab = directed_distances(a, b), ba = directed_distances(b, a);
  return std::max(*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end()));
}

BitMap class_mask(const LabelMap& labels, std::int32_t c) {
  BitMap m(labels.rows, labels.cols, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == c;
  return m;
}

MetricAccumulator::MetricAccumulator(std::size_t num_classes)
    : num_classes_(num_classes),
      dice_sum_(num_classes, 0.0),
      jaccard_sum_(num_classes, 0.0),
      hd_sum_(num_classes, 0.0),
      hd_count_(num_classes, 0) {
  if (num_classes < 2) throw ConfigError("metrics: need at least 2 classes");
}

void MetricAccumulator::add(const LabelMap& prediction, const LabelMap& reference) {
  const auto overlap = dice_jaccard(prediction, reference, num_classes_);
  for (std::size_t c = 0; c < num_classes_; ++c) {
    dice_sum_[c] += overlap[c].dice;
    jaccard_sum_[c] += overlap[c].jaccard;
    const auto ci = static_cast<std::int32_t>(c);
    if (auto h = hd95(class_mask(prediction, ci), class_mask(reference, ci))) {
      hd_sum_[c] += *h;
      ++hd_count_[c];
    }
  }
  ++images_;
}

SegMetrics MetricAccumulator::result() const {
  SegMetrics m;
  m.images = images_;
  m.per_class.resize(num_classes_);
  if (images_ == 0) return m;
  const double n = static_cast<double>(images_);
  double hd_total = 0.0;
  std::size_t hd_classes = 0;
  for (std::size_t c = 0; c < num_classes_; ++c) {
    auto& pc = m.per_class[c];
    pc.dice = dice_sum_[c] / n;
    pc.jaccard = jaccard_sum_[c] / n;
    pc.hd95_count = hd_count_[c];
    pc.hd95_defined = hd_count_[c] > 0;
    pc.hd95 = pc.hd95_defined ? hd_sum_[c] / static_cast<double>(hd_count_[c]) : 0.0;
    if (c == 0) continue;
    m.dice += pc.dice;
    m.jaccard += pc.jaccard;
    if (pc.hd95_defined) {
      hd_total += pc.hd95;
      ++hd_classes;
    }
  }
  const double fg = static_cast<double>(num_classes_ - 1);
  m.dice /= fg;
  m.jaccard /= fg;
  m.hd95_defined = hd_classes > 0;
  m.hd95 = m.hd95_defined ? hd_total / static_cast<double>(hd_classes) : 0.0;
  return m;
}

}  // namespace spcl::metrics
