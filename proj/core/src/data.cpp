#include "spcl/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "spcl/error.hpp"

namespace spcl::data {

static_assert(std::endian::native == std::endian::little, "SEG1 I/O assumes a little-endian host");

std::size_t SplitSpec::labeled_count() const {
  return static_cast<std::size_t>(std::llround(labeled_fraction * static_cast<double>(train_images)));
}

void SplitSpec::validate() const {
  if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0)) {
    throw ConfigError("split: labeled fraction must lie in (0, 1)");
  }
  if (labeled_count() == 0) throw ConfigError("split: no labeled images");
  if (labeled_count() >= unlabeled_count()) {
    throw ConfigError("split: labeled count " + std::to_string(labeled_count()) +
                      " must be smaller than unlabeled count " + std::to_string(unlabeled_count()));
  }
  if (test_images == 0) throw ConfigError("split: no test images");
}

double class_intensity(std::int32_t class_id) {
  switch (class_id) {
    case kBackground: return 0.2;
    case kMyocardium: return 0.45;
    case kVentricle: return 0.75;
    case kBlob: return 0.6;
    default: return 0.9;
  }
}

namespace {

struct Ellipse {
  double cy, cx, a, b, theta;

  // Normalized radius of the pixel centre (r, c) for semi-axes grown by `grow`.
  double radius(double r, double c, double grow) const {
    const double dy = r - cy, dx = c - cx;
    const double u = dx * std::cos(theta) + dy * std::sin(theta);
    const double v = -dx * std::sin(theta) + dy * std::cos(theta);
    const double au = a + grow, bv = b + grow;
    return (u * u) / (au * au) + (v * v) / (bv * bv);
  }
};

std::optional<LabelMap> draw_geometry(std::mt19937_64& rng, const GeneratorOptions& opt) {
  const auto H = opt.height, W = opt.width;
  const double S = static_cast<double>(std::min(H, W));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  Ellipse e{0, 0, uniform(0.15, 0.22) * S, uniform(0.15, 0.22) * S, uniform(0.0, std::numbers::pi)};
  const double thickness = uniform(0.045, 0.07) * S;
  const double margin = std::max(e.a, e.b) + thickness + 2.0;
  const double lo_y = std::max(0.4 * static_cast<double>(H), margin);
  const double hi_y = std::min(0.6 * static_cast<double>(H), static_cast<double>(H) - 1.0 - margin);
  const double lo_x = std::max(0.4 * static_cast<double>(W), margin);
  const double hi_x = std::min(0.6 * static_cast<double>(W), static_cast<double>(W) - 1.0 - margin);
  if (lo_y >= hi_y || lo_x >= hi_x) return std::nullopt;
  e.cy = uniform(lo_y, hi_y);
  e.cx = uniform(lo_x, hi_x);

  LabelMap labels(H, W, kBackground);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double rr = static_cast<double>(r), cc = static_cast<double>(c);
      if (e.radius(rr, cc, 0.0) <= 1.0) {
        labels.at(r, c) = kVentricle;
      } else if (e.radius(rr, cc, thickness) <= 1.0) {
        labels.at(r, c) = kMyocardium;
      }
    }
  }
  if (opt.num_classes < 4) return labels;

  const double radius = uniform(0.05, 0.08) * S;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double by = uniform(radius + 1.0, static_cast<double>(H) - 2.0 - radius);
    const double bx = uniform(radius + 1.0, static_cast<double>(W) - 2.0 - radius);
    std::vector<std::size_t> disk;
    bool clear = true;
    for (std::size_t r = 0; r < H && clear; ++r) {
      for (std::size_t c = 0; c < W; ++c) {
        const double dy = static_cast<double>(r) - by, dx = static_cast<double>(c) - bx;
        if (dy * dy + dx * dx > radius * radius) continue;
        // keep a two-pixel gap to the ring
        for (std::size_t nr = r >= 2 ? r - 2 : 0; nr <= std::min(H - 1, r + 2) && clear; ++nr) {
          for (std::size_t nc = c >= 2 ? c - 2 : 0; nc <= std::min(W - 1, c + 2); ++nc) {
            if (labels.at(nr, nc) != kBackground) {
              clear = false;
              break;
            }
          }
        }
        disk.push_back(r * W + c);
      }
    }
    if (!clear || disk.empty()) continue;
    for (auto i : disk) labels[i] = kBlob;
    return labels;
  }
  return std::nullopt;
}

Tensor render(std::mt19937_64& rng, const LabelMap& labels, const GeneratorOptions& opt) {
  const auto H = opt.height, W = opt.width;
  const double noise = opt.noise_level;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> mean(std::max<std::size_t>(opt.num_classes, 4));
  for (std::size_t c = 0; c < mean.size(); ++c) {
    mean[c] = class_intensity(static_cast<std::int32_t>(c)) + 0.5 * noise * unit(rng);
  }
  const double gy = unit(rng), gx = unit(rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> pixels(H * W);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double bias = 0.5 * noise *
                          (gy * (static_cast<double>(r) / static_cast<double>(H) - 0.5) +
                           gx * (static_cast<double>(c) / static_cast<double>(W) - 0.5));
      double v = mean[static_cast<std::size_t>(labels.at(r, c))] + bias;
      if (noise > 0.0) v += noise * gauss(rng);
      v = std::clamp(v, 0.0, 1.0);
      pixels[r * W + c] = static_cast<double>(static_cast<float>(v));
    }
  }
  return Tensor({1, H, W}, std::move(pixels));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t split, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split), static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void check_options(const GeneratorOptions& opt) {
  if (opt.num_classes < 3) throw ConfigError("generate: need at least 3 classes");
  if (opt.num_classes > 255) throw ConfigError("generate: at most 255 classes fit the label format");
  if (opt.height % 4 != 0 || opt.width % 4 != 0 || opt.height == 0 || opt.width == 0) {
    throw ConfigError("generate: height and width must be positive multiples of 4");
  }
  if (!(opt.noise_level >= 0.0)) throw ConfigError("generate: noise level must be >= 0");
}

std::string make_id(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu", prefix, index);
  return buf;
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t& pos, const std::string& id, const char* what) {
  if (in.size() - pos < sizeof(T)) throw DataError("SEG1 '" + id + "': truncated while reading " + what);
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

Sample generate_sample(const std::string& id, std::uint64_t seed, const GeneratorOptions& options) {
  check_options(options);
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 20; ++attempt) {
    if (auto labels = draw_geometry(rng, options)) {
      Sample s;
      s.id = id;
      s.num_classes = options.num_classes;
      s.image = render(rng, *labels, options);
      s.label = std::move(*labels);
      return s;
    }
  }
  throw DataError("generate: could not place the structures in a " + std::to_string(options.height) + "x" +
                  std::to_string(options.width) + " image for sample '" + id + "'");
}

Dataset generate(const SplitSpec& split, const GeneratorOptions& options) {
  split.validate();
  check_options(options);
  Dataset ds;
  for (std::size_t i = 0; i < split.train_images; ++i) {
    auto s = generate_sample(make_id("train", i), derive_seed(split.seed, 0, i), options);
    if (i < split.labeled_count()) {
      ds.labeled.push_back(std::move(s));
    } else {
      s.label.reset();
      ds.unlabeled.push_back(std::move(s));
    }
  }
  for (std::size_t i = 0; i < split.test_images; ++i) {
    ds.test.push_back(generate_sample(make_id("test", i), derive_seed(split.seed, 1, i), options));
  }
  return ds;
}

std::vector<std::uint8_t> encode_sample(const Sample& s) {
  const auto H = s.height(), W = s.width();
  std::vector<std::uint8_t> out{'S', 'E', 'G', '1'};
  put<std::uint16_t>(out, kSeg1Version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(H));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(W));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(s.num_classes));
  put<std::uint8_t>(out, s.label ? 1 : 0);
  for (double v : s.image.values()) put<float>(out, static_cast<float>(v));
  if (s.label) {
    for (auto v : s.label->values) put<std::uint8_t>(out, static_cast<std::uint8_t>(v));
  }
  return out;
}

Sample decode_sample(const std::vector<std::uint8_t>& bytes, const std::string& id) {
  std::size_t pos = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SEG1", 4) != 0) {
    throw DataError("SEG1 '" + id + "': bad magic");
  }
  pos = 4;
  const auto version = get<std::uint16_t>(bytes, pos, id, "version");
  if (version != kSeg1Version) throw DataError("SEG1 '" + id + "': unknown version " + std::to_string(version));
  const auto H = get<std::uint32_t>(bytes, pos, id, "height");
  const auto W = get<std::uint32_t>(bytes, pos, id, "width");
  const auto C = get<std::uint16_t>(bytes, pos, id, "class count");
  const auto flags = get<std::uint8_t>(bytes, pos, id, "flags");
  if (H == 0 || W == 0 || H % 4 != 0 || W % 4 != 0) {
    throw DataError("SEG1 '" + id + "': dimensions " + std::to_string(H) + "x" + std::to_string(W) +
                    " are not positive multiples of 4");
  }
  if (flags > 1) throw DataError("SEG1 '" + id + "': unknown flags " + std::to_string(flags));
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t expected = pos + plane * sizeof(float) + (flags ? plane : 0);
  if (bytes.size() != expected) {
    throw DataError("SEG1 '" + id + "': expected " + std::to_string(expected) + " bytes, found " +
                    std::to_string(bytes.size()) + (bytes.size() < expected ? " (truncated)" : ""));
  }
  std::vector<double> pixels(plane);
  for (auto& v : pixels) v = static_cast<double>(get<float>(bytes, pos, id, "image"));
  Sample s;
  s.id = id;
  s.num_classes = C;
  s.image = Tensor({1, H, W}, std::move(pixels));
  if (flags) {
    LabelMap labels(H, W, 0);
    for (std::size_t i = 0; i < plane; ++i) {
      const auto v = bytes[pos++];
      if (v >= C) {
        throw DataError("SEG1 '" + id + "': label " + std::to_string(v) + " at pixel (" + std::to_string(i / W) +
                        ", " + std::to_string(i % W) + ") is not below class count " + std::to_string(C));
      }
      labels[i] = v;
    }
    s.label = std::move(labels);
  }
  return s;
}

void save_sample(const std::filesystem::path& path, const Sample& sample) {
  const auto bytes = encode_sample(sample);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Sample load_sample(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_sample(bytes, path.stem().string());
}

void save_dir(const std::filesystem::path& dir, const std::vector<Sample>& samples) {
  std::filesystem::create_directories(dir);
  for (const auto& s : samples) save_sample(dir / (s.id + ".seg1"), s);
}

std::vector<Sample> load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".seg1") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Sample> samples;
  samples.reserve(files.size());
  for (const auto& f : files) samples.push_back(load_sample(f));
  return samples;
}

void save_dataset(const std::filesystem::path& root, const Dataset& dataset) {
  save_dir(root / "labeled", dataset.labeled);
  save_dir(root / "unlabeled", dataset.unlabeled);
  save_dir(root / "test", dataset.test);
}

Dataset load_dataset(const std::filesystem::path& root) {
  Dataset ds;
  ds.labeled = load_dir(root / "labeled");
  ds.unlabeled = load_dir(root / "unlabeled");
  ds.test = load_dir(root / "test");
  for (const auto* split : {&ds.labeled, &ds.test}) {
    for (const auto& s : *split) {
      if (!s.label) throw DataError("sample '" + s.id + "' in a labeled split has no label");
    }
  }
  return ds;
}

}  // namespace spcl::data
