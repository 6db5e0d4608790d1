#include "spcl/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "spcl/error.hpp"
#include "spcl/ops.hpp"

namespace spcl::sampling {
namespace {

// Seeded uniform subset of {0..n-1} of size min(k, n), in draw order.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

std::vector<double> channel_max(const Tensor& probs) {
  const auto channels = probs.dim(0);
  const auto plane = probs.size() / channels;
  auto v = probs.values();
  std::vector<double> out(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(plane));
  for (std::size_t c = 1; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[i] = std::max(out[i], v[c * plane + i]);
  }
  return out;
}

void check_plane(const Tensor& t, const SubclassMap& map, const char* what) {
  if (t.rank() != 3 || t.dim(1) != map.rows() || t.dim(2) != map.cols()) {
    throw ShapeError(std::string("sampling: ") + what + " of shape " + tensor::to_string(t.shape()) +
                     " does not match a " + std::to_string(map.rows()) + "x" + std::to_string(map.cols()) + " map");
  }
}

Tensor stack_rows(const std::vector<const BankEntry*>& entries, std::size_t dim) {
  std::vector<double> values;
  values.reserve(entries.size() * dim);
  for (const auto* e : entries) values.insert(values.end(), e->vector.begin(), e->vector.end());
  return Tensor({entries.size(), dim}, std::move(values), false);
}

}  // namespace

std::size_t AnchorSet::count(std::int32_t subclass) const {
  return static_cast<std::size_t>(
      std::count_if(anchors.begin(), anchors.end(), [&](const Anchor& a) { return a.subclass == subclass; }));
}

AnchorSet select_anchors(Tape& tape, std::span<const AnchorSource> batch, const AnchorOptions& options,
                         std::uint64_t seed) {
  AnchorSet result;
  if (batch.empty()) return result;
  const auto subclass_count = batch.front().subclasses->subclass_count();

  struct Candidate {
    std::size_t image;
    std::size_t pixel;
    double student;
    double reference;
  };
  std::vector<std::vector<Candidate>> candidates(subclass_count);

  for (std::size_t img = 0; img < batch.size(); ++img) {
    const auto& src = batch[img];
    const auto& map = *src.subclasses;
    check_plane(src.student_probs, map, "student probabilities");
    check_plane(src.reference_probs, map, "reference probabilities");
    check_plane(src.embeddings, map, "embeddings");
    const auto student = channel_max(src.student_probs);
    const auto reference = channel_max(src.reference_probs);
    for (std::size_t i = 0; i < map.subclass_id.size(); ++i) {
      const auto s = map.subclass_id[i];
      if (s == subdivision::kIgnoreSubclass) continue;
      if (options.exclude_background && subdivision::class_of(s) == 0) continue;
      if (!is_eligible(student[i], reference[i], options.gamma_s, options.gamma_t)) continue;
      candidates[static_cast<std::size_t>(s)].push_back({img, i, student[i], reference[i]});
    }
  }

  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < subclass_count; ++s) {
    auto& pool = candidates[s];
    auto picked = choose(pool.size(), options.k_anchor, rng);
    std::sort(picked.begin(), picked.end());
    for (auto k : picked) {
      const auto& cand = pool[k];
      const auto& src = batch[cand.image];
      const auto cols = src.subclasses->cols();
      const std::size_t position[] = {cand.pixel};
      Anchor a;
      a.embedding = tensor::gather_columns(tape, src.embeddings, position);
      a.image = cand.image;
      a.row = cand.pixel / cols;
      a.col = cand.pixel % cols;
      a.subclass = static_cast<std::int32_t>(s);
      a.class_id = subdivision::class_of(a.subclass);
      a.region = subdivision::region_of(a.subclass);
      a.student_confidence = cand.student;
      a.reference_confidence = cand.reference;
      result.anchors.push_back(std::move(a));
    }
  }
  return result;
}

AnchorSet select_anchors(Tape& tape, const Tensor& student_probs, const Tensor& reference_probs,
                         const Tensor& embeddings, const SubclassMap& subclasses, double gamma_s, double gamma_t,
                         std::size_t k_anchor, std::uint64_t seed, bool exclude_background) {
  const AnchorSource source{student_probs, reference_probs, embeddings, &subclasses};
  return select_anchors(tape, std::span<const AnchorSource>(&source, 1),
                        AnchorOptions{gamma_s, gamma_t, k_anchor, exclude_background}, seed);
}

Tensor one_hot(const LabelMap& labels, std::size_t num_classes) {
  const auto plane = labels.size();
  std::vector<double> values(num_classes * plane, 0.0);
  for (std::size_t i = 0; i < plane; ++i) {
    const auto c = labels[i];
    if (c == subdivision::kIgnoreLabel) continue;
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
      throw DataError("one_hot: label " + std::to_string(c) + " at pixel " + std::to_string(i) + " out of range");
    }
    values[static_cast<std::size_t>(c) * plane + i] = 1.0;
  }
  return Tensor({num_classes, labels.rows, labels.cols}, std::move(values), false);
}

std::vector<Centroid> compute_centroids(const Tensor& embeddings, const SubclassMap& subclasses,
                                        const Tensor& reference_probs, double gamma_t) {
  check_plane(embeddings, subclasses, "embeddings");
  check_plane(reference_probs, subclasses, "reference probabilities");
  const auto dim = embeddings.dim(0);
  const auto plane = subclasses.subclass_id.size();
  const auto reference = channel_max(reference_probs);
  auto ev = embeddings.values();

  std::vector<std::vector<double>> sums(subclasses.subclass_count(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> confident(subclasses.subclass_count(), 0);
  for (std::size_t i = 0; i < plane; ++i) {
    const auto s = subclasses.subclass_id[i];
    if (s == subdivision::kIgnoreSubclass || reference[i] < gamma_t) continue;
    auto& acc = sums[static_cast<std::size_t>(s)];
    for (std::size_t d = 0; d < dim; ++d) acc[d] += ev[d * plane + i];
    ++confident[static_cast<std::size_t>(s)];
  }

  std::vector<Centroid> out;
  for (std::size_t s = 0; s < sums.size(); ++s) {
    if (confident[s] == 0) continue;
    auto& v = sums[s];
    double norm = 0.0;
    for (auto& x : v) {
      x /= static_cast<double>(confident[s]);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (auto& x : v) x /= norm;
    out.push_back({static_cast<std::int32_t>(s), std::move(v)});
  }
  return out;
}

MemoryBank::MemoryBank(std::size_t subclass_count, std::size_t dim, std::size_t capacity)
    : dim_(dim), capacity_(capacity), queues_(subclass_count) {
  if (capacity == 0) throw ConfigError("memory bank: capacity must be positive");
}

void MemoryBank::push(std::int32_t subclass, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw ShapeError("memory bank: vector of dimension " + std::to_string(vector.size()) + " pushed into a bank of dimension " +
                     std::to_string(dim_));
  }
  double norm = 0.0;
  for (double x : vector) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("memory bank: cannot store a zero or non-finite vector");
  BankEntry entry{std::vector<double>(vector.begin(), vector.end()), subclass, serial_++};
  for (auto& x : entry.vector) x /= norm;
  auto& q = queues_.at(static_cast<std::size_t>(subclass));
  q.push_back(std::move(entry));
  while (q.size() > capacity_) {
    q.pop_front();
    ++evictions_;
  }
}

const std::deque<BankEntry>& MemoryBank::queue(std::int32_t subclass) const {
  if (subclass < 0 || static_cast<std::size_t>(subclass) >= queues_.size()) {
    throw ConfigError("memory bank: subclass " + std::to_string(subclass) + " out of range");
  }
  return queues_[static_cast<std::size_t>(subclass)];
}

void bank_push(MemoryBank& bank, std::span<const Centroid> centroids) {
  for (const auto& c : centroids) bank.push(c.subclass, c.vector);
}

ContrastSamples ContrastSamples::restricted_to(Region region) const {
  ContrastSamples out;
  for (const auto& item : items) {
    if (item.region == region) out.items.push_back(item);
  }
  return out;
}

ContrastSamples draw_samples(const AnchorSet& anchors, const MemoryBank& bank, const UnconcernedRelation& relation,
                             std::size_t k_pos, std::size_t k_neg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ContrastSamples out;
  auto pool_of = [&](const std::vector<std::int32_t>& subclasses) {
    std::vector<const BankEntry*> pool;
    for (auto s : subclasses) {
      for (const auto& e : bank.queue(s)) pool.push_back(&e);
    }
    return pool;
  };
  for (std::size_t i = 0; i < anchors.anchors.size(); ++i) {
    const auto& a = anchors.anchors[i];
    const auto pos_pool = pool_of(relation.positive_subclasses(a.subclass));
    const auto neg_pool = pool_of(relation.negative_subclasses(a.subclass));
    if (pos_pool.empty() || neg_pool.empty()) {
      ++out.dropped;
      continue;
    }
    std::vector<const BankEntry*> pos, neg;
    for (auto k : choose(pos_pool.size(), k_pos, rng)) pos.push_back(pos_pool[k]);
    for (auto k : choose(neg_pool.size(), k_neg, rng)) neg.push_back(neg_pool[k]);

    AnchorSamples item;
    item.anchor = i;
    item.embedding = a.embedding;
    item.subclass = a.subclass;
    item.region = a.region;
    item.positives = stack_rows(pos, bank.dim());
    item.negatives = stack_rows(neg, bank.dim());
    for (const auto* e : pos) item.positive_refs.push_back({e->subclass, e->serial});
    for (const auto* e : neg) item.negative_refs.push_back({e->subclass, e->serial});
    out.items.push_back(std::move(item));
  }
  return out;
}

}  // namespace spcl::sampling
