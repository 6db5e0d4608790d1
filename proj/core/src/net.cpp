#include "spcl/net.hpp"

#include <cmath>
#include <random>

#include "spcl/error.hpp"
#include "spcl/ops.hpp"

namespace spcl::net {

namespace ts = spcl::tensor;

void ModelParams::add(std::string name, Tensor value) {
  for (const auto& [n, _] : entries_) {
    if (n == name) throw ConfigError("model params: duplicate parameter '" + name + "'");
  }
  entries_.emplace_back(std::move(name), std::move(value));
}

const Tensor& ModelParams::at(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw ConfigError("model params: no parameter named '" + std::string(name) + "'");
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

ModelParams ModelParams::clone(bool requires_grad) const {
  ModelParams copy;
  for (const auto& [n, t] : entries_) {
    copy.entries_.emplace_back(n, Tensor(t.shape(), {t.values().begin(), t.values().end()}, requires_grad));
  }
  return copy;
}

void ModelParams::set_requires_grad(bool flag) const {
  for (const auto& [_, t] : entries_) t.set_requires_grad(flag);
}

void ModelParams::zero_grad() const {
  for (const auto& [_, t] : entries_) t.zero_grad();
}

void ModelParams::check_compatible(const ModelParams& other) const {
  if (entries_.size() != other.entries_.size()) {
    throw ShapeError("model params: parameter counts differ (" + std::to_string(entries_.size()) + " vs " +
                     std::to_string(other.entries_.size()) + ")");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [na, ta] = entries_[i];
    const auto& [nb, tb] = other.entries_[i];
    if (na != nb) throw ShapeError("model params: name mismatch '" + na + "' vs '" + nb + "'");
    if (ta.shape() != tb.shape()) {
      throw ShapeError("model params: '" + na + "' has shape " + ts::to_string(ta.shape()) + " vs " +
                       ts::to_string(tb.shape()));
    }
  }
}

double ModelParams::distance(const ModelParams& other) const {
  check_compatible(other);
  double s = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto a = entries_[i].second.values();
    auto b = other.entries_[i].second.values();
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  }
  return std::sqrt(s);
}

namespace {

struct LayerSpec {
  const char* name;
  ts::Shape weight;
  std::size_t bias;
  std::size_t fan_in;
};

std::vector<LayerSpec> layer_specs(const NetConfig& c) {
  const auto head_in = c.enc1 + c.in_channels;
  return {
      {"enc1", {c.enc1, c.in_channels, 3, 3}, c.enc1, c.in_channels * 9},
      {"enc2", {c.enc2, c.enc1, 3, 3}, c.enc2, c.enc1 * 9},
      {"up1", {c.enc2, c.enc1, 2, 2}, c.enc1, c.enc2},
      {"dec1", {c.enc1, 2 * c.enc1, 3, 3}, c.enc1, 2 * c.enc1 * 9},
      {"up2", {c.enc1, c.enc1, 2, 2}, c.enc1, c.enc1},
      {"cls", {c.num_classes, head_in, 1, 1}, c.num_classes, head_in},
      {"proj1", {c.proj_hidden, head_in, 1, 1}, c.proj_hidden, head_in},
      {"proj2", {c.embed_dim, c.proj_hidden, 1, 1}, c.embed_dim, c.proj_hidden},
  };
}

}  // namespace

ModelParams init_params(const NetConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams params;
  for (const auto& spec : layer_specs(config)) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(spec.fan_in)));
    std::vector<double> w(ts::element_count(spec.weight));
    for (auto& v : w) v = normal(rng);
    params.add(std::string(spec.name) + ".weight", Tensor(spec.weight, std::move(w), true));
    params.add(std::string(spec.name) + ".bias", Tensor::zeros({spec.bias}, true));
  }
  return params;
}

ModelParams zero_params(const NetConfig& config) {
  ModelParams params;
  for (const auto& spec : layer_specs(config)) {
    params.add(std::string(spec.name) + ".weight", Tensor::zeros(spec.weight, true));
    params.add(std::string(spec.name) + ".bias", Tensor::zeros({spec.bias}, true));
  }
  return params;
}

NetConfig infer_config(const ModelParams& params) {
  NetConfig c;
  const auto& enc1 = params.at("enc1.weight").shape();
  const auto& enc2 = params.at("enc2.weight").shape();
  const auto& cls = params.at("cls.weight").shape();
  const auto& proj1 = params.at("proj1.weight").shape();
  const auto& proj2 = params.at("proj2.weight").shape();
  c.enc1 = enc1.at(0);
  c.in_channels = enc1.at(1);
  c.enc2 = enc2.at(0);
  c.num_classes = cls.at(0);
  c.proj_hidden = proj1.at(0);
  c.embed_dim = proj2.at(0);
  zero_params(c).check_compatible(params);
  return c;
}

NetworkOutput forward(Tape& tape, const ModelParams& p, const Tensor& image, bool with_embeddings) {
  if (image.rank() != 3) {
    throw ShapeError("forward: image must be [C, H, W], got " + ts::to_string(image.shape()));
  }
  if (image.dim(1) % 4 != 0 || image.dim(2) % 4 != 0) {
    throw ShapeError("forward: H and W must be divisible by 4, got " + ts::to_string(image.shape()));
  }
  auto w = [&](const char* layer) -> const Tensor& { return p.at(std::string(layer) + ".weight"); };
  auto b = [&](const char* layer) -> const Tensor& { return p.at(std::string(layer) + ".bias"); };

  auto e1 = ts::leaky_relu(tape, ts::conv2d(tape, image, w("enc1"), b("enc1"), {2, 1}));
  auto e2 = ts::leaky_relu(tape, ts::conv2d(tape, e1, w("enc2"), b("enc2"), {2, 1}));
  auto u1 = ts::leaky_relu(tape, ts::conv_transpose2d(tape, e2, w("up1"), b("up1"), 2));
  const Tensor skip1[] = {u1, e1};
  auto d1 = ts::leaky_relu(tape, ts::conv2d(tape, ts::concat(tape, skip1), w("dec1"), b("dec1"), {1, 1}));
  auto u2 = ts::leaky_relu(tape, ts::conv_transpose2d(tape, d1, w("up2"), b("up2"), 2));
  const Tensor skip2[] = {u2, image};
  auto features = ts::concat(tape, skip2);

  NetworkOutput out;
  out.logits = ts::conv2d(tape, features, w("cls"), b("cls"));
  out.probabilities = ts::softmax(tape, out.logits);
  if (with_embeddings) {
    auto hidden = ts::relu(tape, ts::conv2d(tape, features, w("proj1"), b("proj1")));
    out.embeddings = ts::l2_normalize(tape, ts::conv2d(tape, hidden, w("proj2"), b("proj2")));
  }
  return out;
}

PseudoLabels pseudo_label(const NetworkOutput& output) {
  const auto& probs = output.probabilities;
  const auto classes = probs.dim(0), rows = probs.dim(1), cols = probs.dim(2);
  const auto plane = rows * cols;
  auto pv = probs.values();
  PseudoLabels result{LabelMap(rows, cols, 0), {}};
  std::vector<double> confidence(plane);
  for (std::size_t i = 0; i < plane; ++i) {
    std::int32_t best = 0;
    double best_p = pv[i];
    for (std::size_t c = 1; c < classes; ++c) {
      if (pv[c * plane + i] > best_p) {
        best_p = pv[c * plane + i];
        best = static_cast<std::int32_t>(c);
      }
    }
    result.labels[i] = best;
    confidence[i] = best_p;
  }
  result.confidence = Tensor({rows, cols}, std::move(confidence), false);
  return result;
}

void ema_update(const ModelParams& teacher, const ModelParams& student, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("ema_update: beta must lie in [0, 1]");
  teacher.check_compatible(student);
  auto t = teacher.entries();
  auto s = student.entries();
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto tv = t[i].second.mutable_values();
    auto sv = s[i].second.values();
    for (std::size_t j = 0; j < tv.size(); ++j) tv[j] = beta * tv[j] + (1.0 - beta) * sv[j];
  }
}

}  // namespace spcl::net
