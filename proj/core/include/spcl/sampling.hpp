#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "spcl/subdivision.hpp"
#include "spcl/tensor.hpp"

namespace spcl::sampling {

using subdivision::Region;
using subdivision::SubclassMap;
using subdivision::UnconcernedRelation;
using tensor::Tape;
using tensor::Tensor;

struct Anchor {
  Tensor embedding;  // [D, 1], gathered from the student projection map (differentiable)
  std::size_t image = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  std::int32_t class_id = 0;
  std::int32_t subclass = 0;
  Region region = Region::Inner;
  double student_confidence = 0.0;    // max_c p_s at the pixel
  double reference_confidence = 0.0;  // max_c p at the pixel
};

struct AnchorSet {
  std::vector<Anchor> anchors;

  std::size_t size() const noexcept { return anchors.size(); }
  bool empty() const noexcept { return anchors.empty(); }
  std::size_t count(std::int32_t subclass) const;
};

// Per-image inputs to anchor selection; all maps share H x W.
struct AnchorSource {
  Tensor student_probs;    // [C, H, W]
  Tensor reference_probs;  // [C, H, W]: one-hot ground truth or teacher probabilities
  Tensor embeddings;       // [D, H, W]
  const SubclassMap* subclasses = nullptr;
};

struct AnchorOptions {
  double gamma_s = 0.75;
  double gamma_t = 0.95;
  std::size_t k_anchor = 32;
  bool exclude_background = true;
};

// Hard (student unsure) and reliable (reference confident). Both bounds inclusive.
constexpr bool is_eligible(double student_confidence, double reference_confidence, double gamma_s,
                           double gamma_t) {
  return student_confidence <= gamma_s && reference_confidence >= gamma_t;
}

// Collects eligible pixels for every anchor-producing subclass over the whole
// batch and keeps a seeded uniform subset of at most k_anchor per subclass.
AnchorSet select_anchors(Tape& tape, std::span<const AnchorSource> batch, const AnchorOptions& options,
                         std::uint64_t seed);

AnchorSet select_anchors(Tape& tape, const Tensor& student_probs, const Tensor& reference_probs,
                         const Tensor& embeddings, const SubclassMap& subclasses, double gamma_s, double gamma_t,
                         std::size_t k_anchor, std::uint64_t seed, bool exclude_background = true);

// Ground-truth labels as one-hot "probabilities" [C, H, W].
Tensor one_hot(const LabelMap& labels, std::size_t num_classes);

struct Centroid {
  std::int32_t subclass = 0;
  std::vector<double> vector;  // unit norm
};

// Mean of the confident member embeddings of every subclass present in the
// map, renormalized to unit length. Subclasses without confident members
// (or whose mean is the zero vector) are omitted.
std::vector<Centroid> compute_centroids(const Tensor& embeddings, const SubclassMap& subclasses,
                                        const Tensor& reference_probs, double gamma_t);

struct BankEntry {
  std::vector<double> vector;
  std::int32_t subclass = 0;
  std::uint64_t serial = 0;  // global push counter, unique per bank
};

// One fixed-capacity FIFO queue of detached unit vectors per subclass.
class MemoryBank {
 public:
  MemoryBank(std::size_t subclass_count, std::size_t dim, std::size_t capacity);

  void push(std::int32_t subclass, std::span<const double> vector);

  const std::deque<BankEntry>& queue(std::int32_t subclass) const;
  std::size_t size(std::int32_t subclass) const { return queue(subclass).size(); }
  std::size_t subclass_count() const noexcept { return queues_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t pushes() const noexcept { return serial_; }
  std::uint64_t evictions() const noexcept { return evictions_; }

 private:
  std::size_t dim_;
  std::size_t capacity_;
  std::uint64_t serial_ = 0;
  std::uint64_t evictions_ = 0;
  std::vector<std::deque<BankEntry>> queues_;
};

void bank_push(MemoryBank& bank, std::span<const Centroid> centroids);

struct SampleRef {
  std::int32_t subclass = 0;
  std::uint64_t serial = 0;
};

struct AnchorSamples {
  std::size_t anchor = 0;  // index into the AnchorSet
  Tensor embedding;        // [D, 1] anchor feature (carries grad)
  std::int32_t subclass = 0;
  Region region = Region::Inner;
  Tensor positives;  // [P, D], detached
  Tensor negatives;  // [N, D], detached
  std::vector<SampleRef> positive_refs;
  std::vector<SampleRef> negative_refs;
};

struct ContrastSamples {
  std::vector<AnchorSamples> items;
  std::size_t dropped = 0;  // anchors with an empty positive or negative pool

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
  ContrastSamples restricted_to(Region region) const;
};

// Positives: up to k_pos entries drawn without replacement from the banks of
// relation.positive_subclasses(s). Negatives: up to k_neg entries drawn from
// the pooled banks of relation.negative_subclasses(s).
ContrastSamples draw_samples(const AnchorSet& anchors, const MemoryBank& bank, const UnconcernedRelation& relation,
                             std::size_t k_pos, std::size_t k_neg, std::uint64_t seed);

}  // namespace spcl::sampling
