#include "spcl/gradsuite.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "spcl/gradcheck.hpp"
#include "spcl/losses.hpp"
#include "spcl/net.hpp"
#include "spcl/ops.hpp"

namespace spcl {
namespace {

namespace ts = tensor;
using tensor::Tape;
using tensor::Tensor;

struct Instance {
  std::mt19937_64 rng;

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }

  Tensor gaussian(ts::Shape shape, double scale = 1.0) {
    std::vector<double> v(ts::element_count(shape));
    for (auto& x : v) x = scale * normal();
    return Tensor(std::move(shape), std::move(v));
  }

  // Rows normalised to unit length, as bank entries are.
  Tensor unit_rows(std::size_t n, std::size_t d) {
    auto t = gaussian({n, d});
    auto v = t.mutable_values();
    for (std::size_t r = 0; r < n; ++r) {
      double norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) norm += v[r * d + j] * v[r * d + j];
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < d; ++j) v[r * d + j] /= norm;
    }
    return t;
  }

  LabelMap labels(std::size_t h, std::size_t w, std::size_t c) {
    LabelMap m(h, w, 0);
    for (auto& x : m.values) x = static_cast<std::int32_t>(index(0, c - 1));
    return m;
  }

  // Teacher probabilities where roughly half the pixels clear gamma_t = 0.95.
  Tensor teacher(std::size_t c, std::size_t h, std::size_t w) {
    std::vector<double> v(c * h * w);
    const auto plane = h * w;
    for (std::size_t i = 0; i < plane; ++i) {
      const bool confident = uniform(0.0, 1.0) < 0.5;
      const auto top = index(0, c - 1);
      const double peak = confident ? uniform(0.96, 0.99) : uniform(0.4, 0.9);
      for (std::size_t k = 0; k < c; ++k) {
        v[k * plane + i] = k == top ? peak : (1.0 - peak) / static_cast<double>(c - 1);
      }
    }
    return Tensor({c, h, w}, std::move(v));
  }
};

struct ContrastSetup {
  Tensor positives;
  Tensor negatives;
};

Tensor anchor_sims(Tape& tape, const Tensor& raw_anchor, const Tensor& rows) {
  return losses::similarities(tape, ts::l2_normalize(tape, raw_anchor), rows);
}

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> r(end - begin);
  std::iota(r.begin(), r.end(), begin);
  return r;
}

}  // namespace

std::vector<GradCaseResult> run_gradient_suite(std::size_t instances, std::uint64_t seed) {
  std::vector<GradCaseResult> results = {{"icl", instances, 0.0},     {"bcl", instances, 0.0},
                                         {"sup", instances, 0.0},     {"unsup", instances, 0.0},
                                         {"composite", instances, 0.0}, {"network", instances, 0.0}};
  auto record = [&](std::size_t which, double err) { results[which].max_error = std::max(results[which].max_error, err); };

  for (std::size_t n = 0; n < instances; ++n) {
    Instance in{std::mt19937_64(seed * 1000003ULL + n)};
    const std::size_t D = in.index(3, 8);
    const double tau = in.uniform(0.2, 1.0);
    const auto P = in.unit_rows(in.index(1, 4), D);
    const auto N = in.unit_rows(in.index(1, 8), D);

    record(0, ts::grad_check(
                  [&](Tape& t, const Tensor& x) { return losses::icl_term(t, anchor_sims(t, x, P), anchor_sims(t, x, N), tau); },
                  in.gaussian({D, 1})));
    record(1, ts::grad_check(
                  [&](Tape& t, const Tensor& x) { return losses::bcl_term(t, anchor_sims(t, x, P), anchor_sims(t, x, N)); },
                  in.gaussian({D, 1})));

    const std::size_t C = in.index(2, 4), H = in.index(2, 4), W = in.index(2, 4);
    const auto labels = in.labels(H, W, C);
    record(2, ts::grad_check(
                  [&](Tape& t, const Tensor& x) { return losses::supervised_loss(t, ts::softmax(t, x), labels); },
                  in.gaussian({C, H, W})));

    const auto teacher = in.teacher(C, H, W);
    record(3, ts::grad_check(
                  [&](Tape& t, const Tensor& x) {
                    return losses::unsupervised_loss(t, ts::softmax(t, x), teacher, 0.95);
                  },
                  in.gaussian({C, H, W})));

    losses::LossConfig cfg;
    cfg.tau = tau;
    cfg.lambda_u = in.uniform(0.0, 1.0);
    cfg.lambda_c = in.uniform(0.0, 1.0);
    cfg.alpha_max = in.uniform(0.0, 1.0);
    cfg.alpha_ramp_steps = 10;
    const std::size_t step = in.index(0, 20);
    const auto plane = C * H * W;
    const auto logit_idx = range(0, plane);
    const auto anchor_idx = range(plane, plane + D);
    const auto P2 = in.unit_rows(in.index(1, 4), D);
    const auto N2 = in.unit_rows(in.index(1, 8), D);
    auto composite = [&](Tape& t, const Tensor& logits, const Tensor& anchor) {
      const auto probs = ts::softmax(t, logits);
      losses::LossTerms terms;
      terms.sup = losses::supervised_loss(t, probs, labels);
      terms.unsup = losses::unsupervised_loss(t, probs, teacher, cfg.gamma_t);
      terms.icl = losses::icl_term(t, anchor_sims(t, anchor, P), anchor_sims(t, anchor, N), tau);
      terms.bcl = losses::bcl_term(t, anchor_sims(t, anchor, P2), anchor_sims(t, anchor, N2));
      return losses::unified_loss(t, terms, cfg, step);
    };
    record(4, ts::grad_check(
                  [&](Tape& t, const Tensor& x) {
                    const auto logits = ts::reshape(t, ts::take(t, x, logit_idx), {C, H, W});
                    const auto anchor = ts::reshape(t, ts::take(t, x, anchor_idx), {D, 1});
                    return composite(t, logits, anchor);
                  },
                  in.gaussian({plane + D})));

    net::NetConfig small{1, C, D, 3, 4, 4};
    const auto params = net::init_params(small, seed * 7919ULL + n);
    params.set_requires_grad(false);
    const auto net_labels = in.labels(4, 4, C);
    const auto net_teacher = in.teacher(C, 4, 4);
    const std::size_t pixel = in.index(0, 15);
    record(5, ts::grad_check(
                  [&](Tape& t, const Tensor& image) {
                    const auto out = net::forward(t, params, image, true);
                    const std::size_t where[] = {pixel};
                    const auto anchor = ts::gather_columns(t, out.embeddings, where);
                    losses::LossTerms terms;
                    terms.sup = losses::supervised_loss(t, out.probabilities, net_labels);
                    terms.unsup = losses::unsupervised_loss(t, out.probabilities, net_teacher, cfg.gamma_t);
                    terms.icl = losses::icl_term(t, losses::similarities(t, anchor, P), losses::similarities(t, anchor, N), tau);
                    terms.bcl = losses::bcl_term(t, losses::similarities(t, anchor, P2), losses::similarities(t, anchor, N2));
                    return losses::unified_loss(t, terms, cfg, step);
                  },
                  in.gaussian({1, 4, 4})));
  }
  return results;
}

}  // namespace spcl
