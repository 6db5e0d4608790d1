#pragma once

#include <functional>

#include "spcl/tensor.hpp"

namespace spcl::tensor {

// A scalar-valued function built from taped operations on its argument.
using ScalarFunction = std::function<Tensor(Tape&, const Tensor&)>;

// Largest |analytic - central difference| / max(1, |central difference|)
// over all coordinates of x. Throws NumericalError naming the coordinate
// when any probe evaluates to a non-finite value.
double grad_check(const ScalarFunction& f, const Tensor& x, double eps = 1e-5);

}  // namespace spcl::tensor
