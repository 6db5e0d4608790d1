#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "spcl/error.hpp"
#include "spcl/gradcheck.hpp"
#include "spcl/ops.hpp"

using namespace spcl;
using namespace spcl::tensor;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0, bool rg = true) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(element_count(shape));
  for (auto& x : v) x = g(rng);
  return Tensor(std::move(shape), std::move(v), rg);
}

// Values kept away from zero so relu kinks never sit inside a finite-difference probe.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.1, 1.5);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(element_count(shape));
  for (auto& x : v) x = sign(rng) ? mag(rng) : -mag(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

Tensor positive_tensor(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> v(element_count(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

// Reduces any tensor to a scalar through a fixed random weighting so that
// every output coordinate influences the checked gradient.
Tensor weighted_sum(Tape& t, const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto w = random_tensor(y.shape(), rng, 1.0, false);
  return sum(t, mul(t, y, w));
}

}  // namespace

TEST_CASE("catalog examples") {
  Tape t;
  SUBCASE("relu") {
    auto y = relu(t, Tensor({2}, {-1.0, 2.0}));
    CHECK(y.values()[0] == 0.0);
    CHECK(y.values()[1] == 2.0);
  }
  SUBCASE("softmax of equal logits") {
    auto y = softmax(t, Tensor({2}, {0.0, 0.0}));
    CHECK(y.values()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(y.values()[1] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("3x3 ones convolved with 3x3 ones, pad 1") {
    auto y = conv2d(t, Tensor::full({1, 3, 3}, 1.0), Tensor::full({1, 1, 3, 3}, 1.0), Tensor(), {1, 1});
    REQUIRE(y.shape() == Shape{1, 3, 3});
    CHECK(y.values()[4] == 9.0);
    CHECK(y.values()[0] == 4.0);
    CHECK(y.values()[1] == 6.0);
  }
  SUBCASE("stride 2 halves the resolution") {
    auto y = conv2d(t, Tensor::full({2, 8, 8}, 1.0), Tensor::full({3, 2, 3, 3}, 1.0), Tensor(), {2, 1});
    CHECK(y.shape() == Shape{3, 4, 4});
  }
  SUBCASE("transposed conv doubles the resolution") {
    auto y = conv_transpose2d(t, Tensor::full({2, 4, 4}, 1.0), Tensor::full({2, 3, 2, 2}, 0.5), Tensor(), 2);
    CHECK(y.shape() == Shape{3, 8, 8});
    for (double v : y.values()) CHECK(v == 1.0);
  }
}

TEST_CASE("backward examples") {
  SUBCASE("d(x.x) = 2x") {
    Tape t;
    Tensor x({2}, {1.0, 2.0}, true);
    t.backward(dot(t, x, x));
    CHECK(x.grad()[0] == 2.0);
    CHECK(x.grad()[1] == 4.0);
  }
  SUBCASE("relu subgradient") {
    Tape t;
    Tensor x({3}, {-1.0, 3.0, 0.0}, true);
    t.backward(sum(t, relu(t, x)));
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 1.0);
    CHECK(x.grad()[2] == 0.0);
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape t;
    Tensor x({2}, {1.0, 2.0}, true);
    CHECK_THROWS_AS(t.backward(scale(t, x, 2.0)), ShapeError);
  }
  SUBCASE("records replay in reverse execution order") {
    Tape t;
    Tensor x({1}, {2.0}, true);
    auto y = exp(t, log(t, x));
    auto names = t.op_names();
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "log");
    CHECK(names[1] == "exp");
    t.backward(sum(t, y));
    CHECK(x.grad()[0] == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("no record without a grad-requiring input") {
    Tape t;
    (void)add(t, Tensor::full({3}, 1.0), Tensor::full({3}, 2.0));
    CHECK(t.size() == 0);
  }
}

TEST_CASE("shape errors name the op and both shapes") {
  Tape t;
  try {
    (void)add(t, Tensor::zeros({2, 3}), Tensor::zeros({3, 2}));
    FAIL("expected a ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[3, 2]") != std::string::npos);
  }
  CHECK_THROWS_AS((void)matmul(t, Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
  CHECK_THROWS_AS((void)conv2d(t, Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 3, 3, 3}), Tensor(), {1, 1}), ShapeError);
}

TEST_CASE("grad_check basics") {
  CHECK(grad_check([](Tape&, const Tensor&) { return Tensor::scalar(3.0); }, Tensor({3}, {1, 2, 3}, true)) == 0.0);
  CHECK_THROWS_AS(grad_check([](Tape& t, const Tensor& x) { return sum(t, log(t, x)); }, Tensor({2}, {1.0, 0.0}, true)),
                  NumericalError);
}

TEST_CASE("every catalog op matches central differences on 100 seeds") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::uint64_t w = seed + 1000;
    auto check = [&](const ScalarFunction& f, const Tensor& x) { worst = std::max(worst, grad_check(f, x)); };

    const auto b = random_tensor({3, 4}, rng, 1.0, false);
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, add(t, x, b), w); }, random_tensor({3, 4}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, sub(t, b, x), w); }, random_tensor({3, 4}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, mul(t, x, x), w); }, random_tensor({3, 4}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, div(t, b, x), w); }, positive_tensor({3, 4}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, scale(t, add_scalar(t, x, 0.3), -1.7), w); },
          random_tensor({5}, rng));
    const auto m = random_tensor({4, 2}, rng, 1.0, false);
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, matmul(t, x, m), w); }, random_tensor({3, 4}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, matmul(t, m, x), w); }, random_tensor({2, 3}, rng));

    const auto img = random_tensor({2, 6, 6}, rng, 1.0, false);
    const auto bias = random_tensor({3}, rng, 1.0, false);
    for (std::size_t stride : {1u, 2u}) {
      check([&](Tape& t, const Tensor& k) { return weighted_sum(t, conv2d(t, img, k, bias, {stride, 1}), w); },
            random_tensor({3, 2, 3, 3}, rng));
      const auto k = random_tensor({3, 2, 3, 3}, rng, 1.0, false);
      check([&](Tape& t, const Tensor& x) { return weighted_sum(t, conv2d(t, x, k, Tensor(), {stride, 1}), w); },
            random_tensor({2, 6, 6}, rng));
    }
    const auto pointwise = random_tensor({3, 2, 1, 1}, rng, 1.0, false);
    check([&](Tape& t, const Tensor& bb) { return weighted_sum(t, conv2d(t, img, pointwise, bb, {1, 0}), w); },
          random_tensor({3}, rng));
    const auto tk = random_tensor({2, 3, 2, 2}, rng, 1.0, false);
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, conv_transpose2d(t, x, tk, bias, 2), w); },
          random_tensor({2, 3, 3}, rng));
    const auto small = random_tensor({2, 3, 3}, rng, 1.0, false);
    check([&](Tape& t, const Tensor& k) { return weighted_sum(t, conv_transpose2d(t, small, k, Tensor(), 2), w); },
          random_tensor({2, 3, 2, 2}, rng));

    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, relu(t, x), w); }, away_from_zero({6}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, leaky_relu(t, x, 0.1), w); }, away_from_zero({6}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, exp(t, x), w); }, random_tensor({6}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, log(t, x), w); }, positive_tensor({6}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, softmax(t, x), w); }, random_tensor({4, 3, 2}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, l2_normalize(t, x), w); }, random_tensor({5, 2, 3}, rng));
    check([&](Tape& t, const Tensor& x) { return dot(t, x, b); }, random_tensor({3, 4}, rng));
    check([&](Tape& t, const Tensor& x) { return scale(t, sum(t, mul(t, x, x)), 0.5); }, random_tensor({7}, rng));
    check([&](Tape& t, const Tensor& x) { return mean(t, mul(t, x, x)); }, random_tensor({7}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, sum_positions(t, mul(t, x, x)), w); },
          random_tensor({3, 2, 2}, rng));
    const auto other = random_tensor({1, 2, 2}, rng, 1.0, false);
    check([&](Tape& t, const Tensor& x) {
      const Tensor parts[] = {x, other, x};
      return weighted_sum(t, concat(t, parts), w);
    }, random_tensor({2, 2, 2}, rng));
    const std::size_t idx[] = {3, 0, 3, 5};
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, take(t, x, idx), w); }, random_tensor({6}, rng));
    const std::size_t cols[] = {2, 0, 2};
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, gather_columns(t, x, cols), w); },
          random_tensor({3, 2, 2}, rng));
    check([&](Tape& t, const Tensor& x) { return weighted_sum(t, reshape(t, x, {3, 2}), w); }, random_tensor({6}, rng));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("softmax and l2_normalize invariants") {
  std::mt19937_64 rng(7);
  Tape t;
  auto x = random_tensor({5, 4, 3}, rng, 3.0, false);
  auto p = softmax(t, x);
  auto z = l2_normalize(t, x);
  const std::size_t plane = 12;
  for (std::size_t i = 0; i < plane; ++i) {
    double s = 0.0, n = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double v = p.values()[c * plane + i];
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      s += v;
      n += z.values()[c * plane + i] * z.values()[c * plane + i];
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-12);
  }
}

TEST_CASE("l2_normalize of a zero column is zero with zero gradient") {
  Tape t;
  Tensor x({2, 2}, {0.0, 3.0, 0.0, 4.0}, true);
  auto z = l2_normalize(t, x);
  CHECK(z.values()[0] == 0.0);
  CHECK(z.values()[2] == 0.0);
  CHECK(z.values()[1] == doctest::Approx(0.6));
  t.backward(sum(t, z));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("identical forward sequences give bitwise-identical gradients") {
  auto run = [] {
    std::mt19937_64 rng(11);
    auto x = random_tensor({2, 8, 8}, rng);
    auto k = random_tensor({4, 2, 3, 3}, rng);
    Tape t;
    auto y = softmax(t, conv2d(t, x, k, Tensor(), {2, 1}));
    t.backward(weighted_sum(t, log(t, y), 3));
    std::vector<double> g(k.grad().begin(), k.grad().end());
    g.insert(g.end(), x.grad().begin(), x.grad().end());
    return g;
  };
  CHECK(run() == run());
}

TEST_CASE("tensor construction is validated") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK(Tensor::zeros({2, 3}).size() == 6);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  auto a = Tensor::full({2}, 1.0, true);
  auto d = a.detached();
  CHECK_FALSE(d.requires_grad());
  CHECK_FALSE(d.shares_storage(a));
}
