#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "spcl/error.hpp"
#include "spcl/losses.hpp"
#include "spcl/ops.hpp"

using namespace spcl;
using namespace spcl::losses;
using sampling::AnchorSamples;

namespace {

std::vector<double> unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  double s = 0.0;
  for (auto& x : v) s += (x = n(rng)) * x;
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

Tensor rows_of(const std::vector<std::vector<double>>& rows, std::size_t dim) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return Tensor({rows.size(), dim}, std::move(flat));
}

struct Instance {
  std::vector<double> anchor;
  std::vector<std::vector<double>> pos, neg;
  std::vector<double> pos_sims() const {
    std::vector<double> s;
    for (const auto& p : pos) s.push_back(oracle::dot(anchor, p));
    return s;
  }
  std::vector<double> neg_sims() const {
    std::vector<double> s;
    for (const auto& n : neg) s.push_back(oracle::dot(anchor, n));
    return s;
  }
  AnchorSamples item(sampling::Region region) const {
    AnchorSamples a;
    a.embedding = Tensor({anchor.size(), 1}, anchor, true);
    a.region = region;
    a.positives = rows_of(pos, anchor.size());
    a.negatives = rows_of(neg, anchor.size());
    return a;
  }
};

Instance random_instance(std::mt19937_64& rng, std::size_t dim, std::size_t P, std::size_t N) {
  Instance in;
  in.anchor = unit(dim, rng);
  for (std::size_t i = 0; i < P; ++i) in.pos.push_back(unit(dim, rng));
  for (std::size_t i = 0; i < N; ++i) in.neg.push_back(unit(dim, rng));
  return in;
}

std::vector<double> random_sims(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("worked contrastive examples") {
  CHECK(icl_anchor_value(std::vector<double>{0.8}, std::vector<double>{0.1, -0.3}, 0.5) ==
        doctest::Approx(0.3056).epsilon(1e-4));
  CHECK(bcl_anchor_value(std::vector<double>{1.0}, std::vector<double>{-1.0}) ==
        doctest::Approx(std::log(1.0 + std::exp(-2.0))));
  CHECK(bcl_anchor_value(std::vector<double>{1.0}, std::vector<double>{-1.0}) == doctest::Approx(0.12693).epsilon(1e-4));
  for (double s : {-1.0, -0.2, 0.0, 0.6, 1.0}) {
    CHECK(bcl_anchor_value(std::vector<double>{s}, std::vector<double>{s}) == doctest::Approx(std::log(2.0)));
  }
  CHECK(icl_anchor_value(std::vector<double>{0.4}, std::vector<double>{}, 0.5) == 0.0);
}

TEST_CASE("scalar losses agree with the direct summation oracles") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> count(1, 12);
  std::uniform_real_distribution<double> tau(0.05, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_sims(rng, count(rng)), n = random_sims(rng, count(rng));
    const double t = tau(rng);
    const double icl = icl_anchor_value(p, n, t), bcl = bcl_anchor_value(p, n);
    CHECK(std::abs(icl - oracle::icl(p, n, t)) < 1e-10 * std::max(1.0, std::abs(icl)));
    CHECK(std::abs(bcl - oracle::bcl(p, n)) < 1e-10 * std::max(1.0, std::abs(bcl)));
    CHECK(icl >= 0.0);
    CHECK(bcl > 0.0);
  }
}

TEST_CASE("taped losses match the oracles and average over anchors") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_instance(rng, 8, 1 + trial % 4, 2 + trial % 7);
    const auto b = random_instance(rng, 8, 3, 5);
    sampling::ContrastSamples samples;
    samples.items = {a.item(sampling::Region::Inner), b.item(sampling::Region::Inner)};
    Tape tape;
    const double icl = icl_loss(tape, samples, 0.5).item();
    const double want_icl =
        0.5 * (oracle::icl(a.pos_sims(), a.neg_sims(), 0.5) + oracle::icl(b.pos_sims(), b.neg_sims(), 0.5));
    CHECK(std::abs(icl - want_icl) < 1e-10);
    const double bcl = bcl_loss(tape, samples).item();
    const double want_bcl = 0.5 * (oracle::bcl(a.pos_sims(), a.neg_sims()) + oracle::bcl(b.pos_sims(), b.neg_sims()));
    CHECK(std::abs(bcl - want_bcl) < 1e-10);
  }
  Tape tape;
  CHECK(icl_loss(tape, {}, 0.5).item() == 0.0);
  CHECK(bcl_loss(tape, {}).item() == 0.0);
}

TEST_CASE("lower bound examples and inequality") {
  const auto ex = icl_lower_bound(0.9, std::vector<double>(4, 0.1), 0.5);
  CHECK(ex.bound == doctest::Approx(-1.8 + std::log(4.0) + 0.2));
  CHECK(ex.bound == doctest::Approx(-0.2137).epsilon(1e-3));
  CHECK(ex.loss >= ex.bound);

  const auto single = icl_lower_bound(0.3, std::vector<double>{0.7}, 0.5);
  CHECK(single.bound == doctest::Approx((0.7 - 0.3) / 0.5));
  CHECK(single.loss == doctest::Approx(std::log1p(std::exp((0.7 - 0.3) / 0.5))));

  const auto far = icl_lower_bound(0.5, std::vector<double>{-200.0}, 0.5);
  CHECK(far.loss < 1e-100);
  CHECK(far.bound < -300.0);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> count(1, 64);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = random_sims(rng, count(rng));
    const double p = random_sims(rng, 1)[0];
    const auto lb = icl_lower_bound(p, n, 0.5);
    CHECK(lb.loss >= lb.bound - 1e-12);
    CHECK(std::abs(lb.bound - oracle::icl_bound(p, n, 0.5)) < 1e-10);
  }
  CHECK_THROWS_AS(icl_lower_bound(0.1, std::vector<double>{}, 0.5), ConfigError);
}

TEST_CASE("boundary loss similarity gradients") {
  const auto g = bcl_similarity_grads(std::vector<double>{0.0}, std::vector<double>{0.0});
  CHECK(g.positive[0] == doctest::Approx(-0.5));
  CHECK(g.negative[0] == doctest::Approx(0.5));

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_sims(rng, 1 + trial % 5), n = random_sims(rng, 1 + trial % 9);
    const auto grads = bcl_similarity_grads(p, n);
    // autodiff through the taped term
    Tensor tp({p.size(), 1}, p, true), tn({n.size(), 1}, n, true);
    Tape tape;
    tape.backward(bcl_term(tape, tp, tn));
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(std::abs(grads.positive[i] - tp.grad()[i]) < 1e-10);
      CHECK(std::abs(grads.positive[i] - oracle::bcl_partials(p, n, i, 0).first) < 1e-10);
      CHECK(grads.positive[i] <= 0.0);
    }
    for (std::size_t j = 0; j < n.size(); ++j) {
      CHECK(std::abs(grads.negative[j] - tn.grad()[j]) < 1e-10);
      CHECK(grads.negative[j] >= 0.0);
    }
  }
}

TEST_CASE("gradient ratio under similarity shifts") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t P = 1 + trial % 4, N = 2 + trial % 10;
    auto p = random_sims(rng, P), n = random_sims(rng, N);
    const double delta = 0.1;
    const double base = bcl_gradient_ratio(p, n, 0, 0);

    // shifting every similarity leaves the ratio unchanged
    auto p_all = p, n_all = n;
    for (auto& x : p_all) x += delta;
    for (auto& x : n_all) x += delta;
    CHECK(std::abs(bcl_gradient_ratio(p_all, n_all, 0, 0) - base) < 1e-10 * base);

    // shifting the chosen pair only lowers it once more than one negative competes
    auto p_pair = p, n_pair = n;
    p_pair[0] += delta;
    n_pair[0] += delta;
    CHECK(bcl_gradient_ratio(p_pair, n_pair, 0, 0) < base);
  }
  const double singleton = bcl_gradient_ratio(std::vector<double>{0.3}, std::vector<double>{-0.2});
  CHECK(bcl_gradient_ratio(std::vector<double>{0.4}, std::vector<double>{-0.1}) == doctest::Approx(singleton));
}

TEST_CASE("supervised loss") {
  LabelMap labels(2, 3, 0);
  labels[1] = 1;
  labels[2] = 2;
  labels[3] = 3;
  labels[5] = 1;
  std::vector<double> hot(4 * 6, 0.0);
  for (std::size_t i = 0; i < 6; ++i) hot[static_cast<std::size_t>(labels[i]) * 6 + i] = 1.0;
  Tape tape;
  CHECK(soft_dice_loss(tape, Tensor({4, 2, 3}, hot), labels).item() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cross_entropy(tape, Tensor({4, 2, 3}, hot), labels).item() == 0.0);
  CHECK(cross_entropy(tape, Tensor::full({4, 2, 3}, 0.25), labels).item() == doctest::Approx(std::log(4.0)));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> cls(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits(4 * 20);
    for (auto& x : logits) x = u(rng);
    LabelMap y(4, 5, 0);
    std::vector<int> yv(20);
    for (std::size_t i = 0; i < 20; ++i) yv[i] = y[i] = cls(rng);
    Tape t;
    const auto probs = tensor::softmax(t, Tensor({4, 4, 5}, logits));
    const std::vector<double> pv(probs.values().begin(), probs.values().end());
    const double want = 0.5 * (oracle::cross_entropy(pv, yv) + oracle::soft_dice_loss(pv, yv, 4));
    CHECK(std::abs(supervised_loss(t, probs, y).item() - want) < 1e-10);
  }
  LabelMap bad(2, 3, 0);
  bad[4] = 7;
  CHECK_THROWS_AS(cross_entropy(tape, Tensor::full({4, 2, 3}, 0.25), bad), DataError);
  CHECK_THROWS_AS(soft_dice_loss(tape, Tensor::full({4, 2, 3}, 0.25), LabelMap(3, 3, 0)), ShapeError);
}

TEST_CASE("unsupervised loss gating") {
  // teacher confidence 0.9 everywhere: nothing passes gamma_t = 0.95
  std::vector<double> teacher(3 * 8, 0.05);
  for (std::size_t i = 0; i < 8; ++i) teacher[(i % 3) * 8 + i] = 0.9;
  Tape tape;
  const Tensor student = Tensor::full({3, 2, 4}, 1.0 / 3);
  CHECK(unsupervised_loss(tape, student, Tensor({3, 2, 4}, teacher), 0.95).item() == 0.0);

  // student one-hot on the teacher's confident argmax
  std::vector<double> confident(3 * 8, 0.01), hot(3 * 8, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    confident[(i % 3) * 8 + i] = 0.98;
    hot[(i % 3) * 8 + i] = 1.0;
  }
  CHECK(unsupervised_loss(tape, Tensor({3, 2, 4}, hot), Tensor({3, 2, 4}, confident), 0.95).item() ==
        doctest::Approx(0.0).epsilon(1e-12));

  // half the pixels gated out
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> t(3 * 8), s(3 * 8);
    std::vector<int> labels(8);
    std::vector<bool> mask(8);
    for (std::size_t i = 0; i < 8; ++i) {
      const std::size_t top = static_cast<std::size_t>(trial + i) % 3;
      const double conf = i % 2 == 0 ? 0.97 : 0.6;
      for (std::size_t c = 0; c < 3; ++c) t[c * 8 + i] = c == top ? conf : (1.0 - conf) / 2;
      labels[i] = static_cast<int>(top);
      mask[i] = i % 2 == 0;
      double sum = 0.0;
      for (std::size_t c = 0; c < 3; ++c) sum += s[c * 8 + i] = u(rng) + 0.01;
      for (std::size_t c = 0; c < 3; ++c) s[c * 8 + i] /= sum;
    }
    const double got = unsupervised_loss(tape, Tensor({3, 2, 4}, s), Tensor({3, 2, 4}, t), 0.95).item();
    CHECK(std::abs(got - oracle::soft_dice_loss(s, labels, 3, mask)) < 1e-10);
  }
}

TEST_CASE("alpha schedule and loss combination") {
  LossConfig cfg;
  cfg.alpha_ramp_steps = 800;
  CHECK(alpha_at(cfg, 0) == 0.0);
  CHECK(alpha_at(cfg, 400) == doctest::Approx(0.05));
  CHECK(alpha_at(cfg, 800) == doctest::Approx(0.1));
  CHECK(alpha_at(cfg, 5000) == doctest::Approx(0.1));
  for (std::size_t s = 1; s < 1000; ++s) CHECK(alpha_at(cfg, s) >= alpha_at(cfg, s - 1));
  cfg.alpha_ramp_steps = 0;
  CHECK(alpha_at(cfg, 0) == 0.1);

  Tape tape;
  const LossTerms terms{Tensor::scalar(0.7), Tensor::scalar(0.4), Tensor::scalar(2.0), Tensor::scalar(3.0)};
  LossConfig c;
  c.alpha_ramp_steps = 100;
  // at alpha = 0 the contrastive part is the inner term alone
  CHECK(unified_loss(tape, terms, c, 0).item() == doctest::Approx(0.7 + 0.3 * 0.4 + 0.1 * 2.0));
  CHECK(unified_loss(tape, terms, c, 100).item() == doctest::Approx(0.7 + 0.3 * 0.4 + 0.1 * (0.9 * 2.0 + 0.1 * 3.0)));
  c.lambda_u = c.lambda_c = 0.0;
  CHECK(unified_loss(tape, terms, c, 50).item() == doctest::Approx(0.7));

  LossConfig bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("unconcerned siblings do not influence the inner loss") {
  // The anchor sits between its own cluster and the sibling subclass cluster.
  // Moving the sibling entries changes the loss only when they act as negatives.
  std::mt19937_64 rng(21);
  const std::size_t D = 6;
  auto make = [&](const std::vector<std::vector<double>>& sibling, bool as_negatives) {
    Instance in = random_instance(rng, D, 0, 0);
    in.anchor = {1, 0, 0, 0, 0, 0};
    in.pos = {{0.9, std::sqrt(1 - 0.81), 0, 0, 0, 0}};
    in.neg = {{0, 0, 0, 1, 0, 0}, {0, 0, 0, 0, 1, 0}};
    if (as_negatives) in.neg.insert(in.neg.end(), sibling.begin(), sibling.end());
    return in;
  };
  const std::vector<std::vector<double>> near{{0.95, 0, std::sqrt(1 - 0.9025), 0, 0, 0}};
  const std::vector<std::vector<double>> far{{-0.5, 0, std::sqrt(0.75), 0, 0, 0}};

  const auto us_near = make(near, false), us_far = make(far, false);
  CHECK(icl_anchor_value(us_near.pos_sims(), us_near.neg_sims(), 0.5) ==
        icl_anchor_value(us_far.pos_sims(), us_far.neg_sims(), 0.5));
  const auto neg_near = make(near, true), neg_far = make(far, true);
  CHECK(icl_anchor_value(neg_near.pos_sims(), neg_near.neg_sims(), 0.5) >
        icl_anchor_value(neg_far.pos_sims(), neg_far.neg_sims(), 0.5) + 0.1);

  // The gradient on the anchor points away from a negative sibling but is
  // blind to it when the sibling is unconcerned.
  sampling::ContrastSamples with, without;
  with.items = {neg_near.item(sampling::Region::Inner)};
  without.items = {us_near.item(sampling::Region::Inner)};
  Tape t1, t2;
  t1.backward(icl_loss(t1, with, 0.5));
  t2.backward(icl_loss(t2, without, 0.5));
  CHECK(with.items[0].embedding.grad()[2] > without.items[0].embedding.grad()[2]);
  CHECK(without.items[0].embedding.grad()[2] == 0.0);
}
