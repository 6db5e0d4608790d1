#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spcl/grid.hpp"
#include "spcl/tensor.hpp"

namespace spcl::data {

using tensor::Tensor;

// Synthetic class ids.
inline constexpr std::int32_t kBackground = 0;
inline constexpr std::int32_t kMyocardium = 1;
inline constexpr std::int32_t kVentricle = 2;
inline constexpr std::int32_t kBlob = 3;

struct Sample {
  std::string id;
  Tensor image;                   // [1, H, W], values in [0, 1], exactly representable as float32
  std::optional<LabelMap> label;  // absent for unlabeled images
  std::size_t num_classes = 0;

  std::size_t height() const { return image.dim(1); }
  std::size_t width() const { return image.dim(2); }
};

struct SplitSpec {
  std::size_t train_images = 80;
  double labeled_fraction = 0.1;
  std::size_t test_images = 40;
  std::uint64_t seed = 0;

  std::size_t labeled_count() const;
  std::size_t unlabeled_count() const { return train_images - labeled_count(); }
  // Requires at least one labeled image and strictly fewer labeled than unlabeled.
  void validate() const;
};

struct GeneratorOptions {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t num_classes = 4;
  double noise_level = 0.15;
};

struct Dataset {
  std::vector<Sample> labeled;
  std::vector<Sample> unlabeled;
  std::vector<Sample> test;
};

// Ring (myocardium) around an ellipse (ventricle) plus an off-centre blob when
// num_classes >= 4, Gaussian noise and per-image intensity jitter scaled by
// noise_level. Every sample is a pure function of (split seed, split, index).
Dataset generate(const SplitSpec& split, const GeneratorOptions& options);

// One labeled sample from an explicit seed.
Sample generate_sample(const std::string& id, std::uint64_t seed, const GeneratorOptions& options);

// Mean intensity of each class before jitter and noise.
double class_intensity(std::int32_t class_id);

// SEG1 file layout, little-endian:
//   "SEG1" | version u16 | H u32 | W u32 | C u16 | flags u8 (bit 0: has label)
//   | image f32 x H*W (row-major) | label u8 x H*W (only when has label)
inline constexpr std::uint16_t kSeg1Version = 1;

std::vector<std::uint8_t> encode_sample(const Sample& sample);
Sample decode_sample(const std::vector<std::uint8_t>& bytes, const std::string& id);

void save_sample(const std::filesystem::path& path, const Sample& sample);
Sample load_sample(const std::filesystem::path& path);

// <dir>/<id>.seg1 for every sample; load returns samples sorted by id.
void save_dir(const std::filesystem::path& dir, const std::vector<Sample>& samples);
std::vector<Sample> load_dir(const std::filesystem::path& dir);

// <root>/{labeled,unlabeled,test}/
void save_dataset(const std::filesystem::path& root, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace spcl::data
