#pragma once

#include <cstddef>
#include <span>

#include "spcl/tensor.hpp"

// Differentiable operation catalog. Every op records onto the given tape when
// at least one input requires grad; otherwise it is a plain evaluation.
// Layouts are channel-first: images are [C, H, W], "axis 0" is the channel /
// feature axis and the trailing axes enumerate positions.
namespace spcl::tensor {

// Elementwise, identical shapes.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor div(Tape& tape, const Tensor& a, const Tensor& b);

Tensor scale(Tape& tape, const Tensor& x, double factor);
Tensor add_scalar(Tape& tape, const Tensor& x, double offset);

// [m, k] x [k, n] -> [m, n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// input [Cin, H, W], weight [Cout, Cin, k, k], bias [Cout] -> [Cout, Ho, Wo]
// with zero padding; stride 1 or 2.
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options = {});

// input [Cin, H, W], weight [Cin, Cout, k, k], bias [Cout]
// -> [Cout, (H-1)*stride + k, (W-1)*stride + k]. The adjoint of conv2d without padding.
Tensor conv_transpose2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::size_t stride = 2);

Tensor relu(Tape& tape, const Tensor& x);
Tensor leaky_relu(Tape& tape, const Tensor& x, double slope = 0.01);
Tensor exp(Tape& tape, const Tensor& x);
Tensor log(Tape& tape, const Tensor& x);

// Softmax across axis 0, independently at every position.
Tensor softmax(Tape& tape, const Tensor& x);
// Unit Euclidean norm across axis 0 at every position; zero columns map to zero.
Tensor l2_normalize(Tape& tape, const Tensor& x);

// Same element count -> scalar.
Tensor dot(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);
// [C, ...] -> [C], summing all positions of each channel.
Tensor sum_positions(Tape& tape, const Tensor& x);

// Concatenation along axis 0; trailing dimensions must agree.
Tensor concat(Tape& tape, std::span<const Tensor> parts);
// Flat element gather -> [K].
Tensor take(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices);
// x viewed as [D, P]; picks position columns -> [D, K].
Tensor gather_columns(Tape& tape, const Tensor& x, std::span<const std::size_t> positions);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

}  // namespace spcl::tensor
