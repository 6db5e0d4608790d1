#include "spcl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spcl/error.hpp"

namespace spcl::tensor {
namespace {

double evaluate(const ScalarFunction& f, const Shape& shape, const std::vector<double>& point,
                std::size_t coordinate) {
  Tape tape;
  auto value = f(tape, Tensor(shape, point, false)).item();
  if (!std::isfinite(value)) {
    throw NumericalError("grad_check: non-finite evaluation at coordinate " + std::to_string(coordinate));
  }
  return value;
}

}  // namespace

double grad_check(const ScalarFunction& f, const Tensor& x, double eps) {
  std::vector<double> point(x.values().begin(), x.values().end());

  Tape tape;
  Tensor leaf(x.shape(), point, true);
  auto loss = f(tape, leaf);
  if (!std::isfinite(loss.item())) throw NumericalError("grad_check: non-finite value at the base point");
  std::vector<double> analytic(point.size(), 0.0);
  if (loss.requires_grad()) {
    tape.backward(loss);
    if (leaf.has_grad()) analytic.assign(leaf.grad().begin(), leaf.grad().end());
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double up = evaluate(f, x.shape(), point, i);
    point[i] = saved - eps;
    const double down = evaluate(f, x.shape(), point, i);
    point[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace spcl::tensor
