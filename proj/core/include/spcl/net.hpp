#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spcl/grid.hpp"
#include "spcl/tensor.hpp"

namespace spcl::net {

using tensor::Tape;
using tensor::Tensor;

// Encoder: two stride-2 3x3 convs (in -> enc1 -> enc2).
// Decoder: 2x2 transposed conv back to H/2, skip-concat with the first
// encoder stage, 3x3 conv to enc1, 2x2 transposed conv to full resolution,
// then concat with the raw image. Heads are 1x1 convs on that map.
struct NetConfig {
  std::size_t in_channels = 1;
  std::size_t num_classes = 4;
  std::size_t embed_dim = 32;
  std::size_t enc1 = 16;
  std::size_t enc2 = 32;
  std::size_t proj_hidden = 32;

  bool operator==(const NetConfig&) const = default;
};

class ModelParams {
 public:
  using Entry = std::pair<std::string, Tensor>;

  void add(std::string name, Tensor value);
  const Tensor& at(std::string_view name) const;
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  // Deep copy with fresh storage.
  ModelParams clone(bool requires_grad) const;
  void set_requires_grad(bool flag) const;
  void zero_grad() const;

  // Throws ShapeError when names or shapes differ.
  void check_compatible(const ModelParams& other) const;
  // Euclidean distance between the flattened parameter vectors.
  double distance(const ModelParams& other) const;

 private:
  std::vector<Entry> entries_;
};

ModelParams init_params(const NetConfig& config, std::uint64_t seed);
ModelParams zero_params(const NetConfig& config);
NetConfig infer_config(const ModelParams& params);

struct NetworkOutput {
  Tensor logits;         // [C, H, W]
  Tensor probabilities;  // [C, H, W]
  Tensor embeddings;     // [D, H, W], unit norm per pixel; undefined when not requested
};

// image is [in_channels, H, W] with H and W divisible by 4.
NetworkOutput forward(Tape& tape, const ModelParams& params, const Tensor& image, bool with_embeddings = true);

struct PseudoLabels {
  LabelMap labels;
  Tensor confidence;  // [H, W], detached
};

// Per-pixel argmax (lowest index wins ties) and max probability.
PseudoLabels pseudo_label(const NetworkOutput& output);

// teacher <- beta * teacher + (1 - beta) * student, in place.
void ema_update(const ModelParams& teacher, const ModelParams& student, double beta);

}  // namespace spcl::net
