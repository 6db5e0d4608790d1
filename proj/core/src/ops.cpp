#include "spcl/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "spcl/error.hpp"

namespace spcl::tensor {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

[[noreturn]] void shape_mismatch(std::string_view op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()));
}

[[noreturn]] void bad_shape(std::string_view op, const Tensor& a, std::string_view expected) {
  throw ShapeError(std::string(op) + ": expected " + std::string(expected) + ", got shape " +
                   to_string(a.shape()));
}

Tensor make_output(std::string_view op, Shape shape, std::vector<double> values, bool requires_grad) {
#ifndef NDEBUG
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError(std::string(op) + ": produced a non-finite value");
  }
#else
  (void)op;
#endif
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

// Positions per channel for a channel-first tensor.
std::size_t positions_of(const Tensor& x) { return x.rank() == 0 ? 1 : x.size() / x.dim(0); }
std::size_t channels_of(const Tensor& x) { return x.rank() == 0 ? 1 : x.dim(0); }

void require_same(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch(op, a, b);
}

template <typename Forward, typename Derivative>
Tensor unary(Tape& tape, std::string_view op, const Tensor& x, Forward f, Derivative df) {
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  auto y = make_output(op, x.shape(), std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.record(op, {x}, y, [x, y, df](std::span<const double> g) {
      auto gx = x.grad_buffer();
      auto xv = x.values();
      auto yv = y.values();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
    });
  }
  return y;
}

void im2col(const double* image, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t kernel, std::size_t stride, std::size_t pad, std::size_t out_h,
            std::size_t out_w, double* cols) {
  const std::size_t plane = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ki = 0; ki < kernel; ++ki) {
      for (std::size_t kj = 0; kj < kernel; ++kj) {
        double* dst = cols + ((c * kernel + ki) * kernel + kj) * plane;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ki) - static_cast<std::ptrdiff_t>(pad);
          double* row = dst + oy * out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) {
            std::fill(row, row + out_w, 0.0);
            continue;
          }
          const double* src = image + (c * height + static_cast<std::size_t>(iy)) * width;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kj) - static_cast<std::ptrdiff_t>(pad);
            row[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into the image.
void col2im(const double* cols, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t kernel, std::size_t stride, std::size_t pad, std::size_t out_h,
            std::size_t out_w, double* image) {
  const std::size_t plane = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ki = 0; ki < kernel; ++ki) {
      for (std::size_t kj = 0; kj < kernel; ++kj) {
        const double* src = cols + ((c * kernel + ki) * kernel + kj) * plane;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ki) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) continue;
          double* dst = image + (c * height + static_cast<std::size_t>(iy)) * width;
          const double* row = src + oy * out_w;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kj) - static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(width)) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

void check_bias(std::string_view op, const Tensor& bias, std::size_t out_channels) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_channels)) {
    bad_shape(op, bias, "bias of shape [" + std::to_string(out_channels) + "]");
  }
}

void add_bias(const Tensor& bias, std::size_t channels, std::size_t plane, std::vector<double>& out) {
  if (!bias.defined()) return;
  auto b = bias.values();
  for (std::size_t c = 0; c < channels; ++c) {
    double* row = out.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) row[i] += b[c];
  }
}

void accumulate_bias_grad(const Tensor& bias, std::size_t channels, std::size_t plane,
                          std::span<const double> g) {
  if (!bias.defined() || !bias.requires_grad()) return;
  auto gb = bias.grad_buffer();
  for (std::size_t c = 0; c < channels; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += g[c * plane + i];
    gb[c] += s;
  }
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  auto y = make_output("add", a.shape(), std::move(out), rg);
  if (rg) {
    tape.record("add", {a, b}, y, [a, b](std::span<const double> g) {
      for (const auto* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto gt = t->grad_buffer();
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += g[i];
      }
    });
  }
  return y;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  auto y = make_output("sub", a.shape(), std::move(out), rg);
  if (rg) {
    tape.record("sub", {a, b}, y, [a, b](std::span<const double> g) {
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return y;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  auto y = make_output("mul", a.shape(), std::move(out), rg);
  if (rg) {
    tape.record("mul", {a, b}, y, [a, b](std::span<const double> g) {
      auto av = a.values(), bv = b.values();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return y;
}

Tensor div(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same("div", a, b);
  auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  auto y = make_output("div", a.shape(), std::move(out), rg);
  if (rg) {
    tape.record("div", {a, b}, y, [a, b, y](std::span<const double> g) {
      auto bv = b.values(), yv = y.values();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] / bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i] * yv[i] / bv[i];
      }
    });
  }
  return y;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  return unary(
      tape, "scale", x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(Tape& tape, const Tensor& x, double offset) {
  return unary(
      tape, "add_scalar", x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_mismatch("matmul", a, b);
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  MatMap(out.data(), m, n).noalias() = ConstMatMap(a.values().data(), m, k) * ConstMatMap(b.values().data(), k, n);
  const bool rg = a.requires_grad() || b.requires_grad();
  auto y = make_output("matmul", {m, n}, std::move(out), rg);
  if (rg) {
    tape.record("matmul", {a, b}, y, [a, b, m, k, n](std::span<const double> g) {
      ConstMatMap G(g.data(), m, n);
      if (a.requires_grad()) {
        MatMap(a.grad_buffer().data(), m, k).noalias() += G * ConstMatMap(b.values().data(), k, n).transpose();
      }
      if (b.requires_grad()) {
        MatMap(b.grad_buffer().data(), k, n).noalias() += ConstMatMap(a.values().data(), m, k).transpose() * G;
      }
    });
  }
  return y;
}

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options) {
  constexpr std::string_view op = "conv2d";
  if (input.rank() != 3) bad_shape(op, input, "input [Cin, H, W]");
  if (weight.rank() != 4 || weight.dim(1) != input.dim(0) || weight.dim(2) != weight.dim(3)) {
    shape_mismatch(op, input, weight);
  }
  if (options.stride != 1 && options.stride != 2) throw ShapeError("conv2d: stride must be 1 or 2");
  const auto cin = input.dim(0), height = input.dim(1), width = input.dim(2);
  const auto cout = weight.dim(0), kernel = weight.dim(2);
  const auto pad = options.padding, stride = options.stride;
  check_bias(op, bias, cout);
  if (height + 2 * pad < kernel || width + 2 * pad < kernel) shape_mismatch(op, input, weight);
  const auto out_h = (height + 2 * pad - kernel) / stride + 1;
  const auto out_w = (width + 2 * pad - kernel) / stride + 1;
  const auto plane = out_h * out_w;
  const auto depth = cin * kernel * kernel;

  auto cols = std::make_shared<std::vector<double>>(depth * plane);
  im2col(input.values().data(), cin, height, width, kernel, stride, pad, out_h, out_w, cols->data());
  std::vector<double> out(cout * plane);
  MatMap(out.data(), cout, plane).noalias() =
      ConstMatMap(weight.values().data(), cout, depth) * ConstMatMap(cols->data(), depth, plane);
  add_bias(bias, cout, plane, out);

  const bool rg = input.requires_grad() || weight.requires_grad() || (bias.defined() && bias.requires_grad());
  auto y = make_output(op, {cout, out_h, out_w}, std::move(out), rg);
  if (rg) {
    if (!weight.requires_grad()) cols.reset();
    std::vector<Tensor> inputs{input, weight};
    if (bias.defined()) inputs.push_back(bias);
    tape.record(op, std::move(inputs), y,
                [=](std::span<const double> g) {
                  ConstMatMap G(g.data(), cout, plane);
                  if (weight.requires_grad()) {
                    MatMap(weight.grad_buffer().data(), cout, depth).noalias() +=
                        G * ConstMatMap(cols->data(), depth, plane).transpose();
                  }
                  accumulate_bias_grad(bias, cout, plane, g);
                  if (input.requires_grad()) {
                    std::vector<double> dcols(depth * plane);
                    MatMap(dcols.data(), depth, plane).noalias() =
                        ConstMatMap(weight.values().data(), cout, depth).transpose() * G;
                    col2im(dcols.data(), cin, height, width, kernel, stride, pad, out_h, out_w,
                           input.grad_buffer().data());
                  }
                });
  }
  return y;
}

Tensor conv_transpose2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::size_t stride) {
  constexpr std::string_view op = "conv_transpose2d";
  if (input.rank() != 3) bad_shape(op, input, "input [Cin, H, W]");
  if (weight.rank() != 4 || weight.dim(0) != input.dim(0) || weight.dim(2) != weight.dim(3)) {
    shape_mismatch(op, input, weight);
  }
  if (stride < 1) throw ShapeError("conv_transpose2d: stride must be positive");
  const auto cin = input.dim(0), height = input.dim(1), width = input.dim(2);
  const auto cout = weight.dim(1), kernel = weight.dim(2);
  check_bias(op, bias, cout);
  const auto out_h = (height - 1) * stride + kernel;
  const auto out_w = (width - 1) * stride + kernel;
  const auto in_plane = height * width;
  const auto depth = cout * kernel * kernel;

  std::vector<double> cols(depth * in_plane);
  MatMap(cols.data(), depth, in_plane).noalias() =
      ConstMatMap(weight.values().data(), cin, depth).transpose() *
      ConstMatMap(input.values().data(), cin, in_plane);
  std::vector<double> out(cout * out_h * out_w, 0.0);
  col2im(cols.data(), cout, out_h, out_w, kernel, stride, 0, height, width, out.data());
  add_bias(bias, cout, out_h * out_w, out);

  const bool rg = input.requires_grad() || weight.requires_grad() || (bias.defined() && bias.requires_grad());
  auto y = make_output(op, {cout, out_h, out_w}, std::move(out), rg);
  if (rg) {
    std::vector<Tensor> inputs{input, weight};
    if (bias.defined()) inputs.push_back(bias);
    tape.record(op, std::move(inputs), y, [=](std::span<const double> g) {
      accumulate_bias_grad(bias, cout, out_h * out_w, g);
      std::vector<double> dcols(depth * in_plane);
      im2col(g.data(), cout, out_h, out_w, kernel, stride, 0, height, width, dcols.data());
      ConstMatMap dC(dcols.data(), depth, in_plane);
      if (input.requires_grad()) {
        MatMap(input.grad_buffer().data(), cin, in_plane).noalias() +=
            ConstMatMap(weight.values().data(), cin, depth) * dC;
      }
      if (weight.requires_grad()) {
        MatMap(weight.grad_buffer().data(), cin, depth).noalias() +=
            ConstMatMap(input.values().data(), cin, in_plane) * dC.transpose();
      }
    });
  }
  return y;
}

Tensor relu(Tape& tape, const Tensor& x) {
  return unary(
      tape, "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope) {
  return unary(
      tape, "leaky_relu", x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor exp(Tape& tape, const Tensor& x) {
  return unary(
      tape, "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(Tape& tape, const Tensor& x) {
  return unary(
      tape, "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor softmax(Tape& tape, const Tensor& x) {
  const auto channels = channels_of(x), positions = positions_of(x);
  auto xv = x.values();
  std::vector<double> out(xv.size());
  std::vector<double> peak(positions, -std::numeric_limits<double>::infinity());
  std::vector<double> total(positions, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < positions; ++p) peak[p] = std::max(peak[p], xv[c * positions + p]);
  }
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < positions; ++p) {
      const double e = std::exp(xv[c * positions + p] - peak[p]);
      out[c * positions + p] = e;
      total[p] += e;
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < positions; ++p) out[c * positions + p] /= total[p];
  }
  auto y = make_output("softmax", x.shape(), std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.record("softmax", {x}, y, [x, y, channels, positions](std::span<const double> g) {
      auto yv = y.values();
      auto gx = x.grad_buffer();
      std::vector<double> inner(positions, 0.0);
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t p = 0; p < positions; ++p) inner[p] += g[c * positions + p] * yv[c * positions + p];
      }
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t p = 0; p < positions; ++p) {
          const auto i = c * positions + p;
          gx[i] += yv[i] * (g[i] - inner[p]);
        }
      }
    });
  }
  return y;
}

Tensor l2_normalize(Tape& tape, const Tensor& x) {
  const auto channels = channels_of(x), positions = positions_of(x);
  auto xv = x.values();
  auto norms = std::make_shared<std::vector<double>>(positions, 0.0);
  auto& n = *norms;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < positions; ++p) n[p] += xv[c * positions + p] * xv[c * positions + p];
  }
  for (auto& v : n) v = std::sqrt(v);
  std::vector<double> out(xv.size(), 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < positions; ++p) {
      if (n[p] > 0.0) out[c * positions + p] = xv[c * positions + p] / n[p];
    }
  }
  auto y = make_output("l2_normalize", x.shape(), std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.record("l2_normalize", {x}, y, [x, y, norms, channels, positions](std::span<const double> g) {
      auto yv = y.values();
      auto gx = x.grad_buffer();
      const auto& n = *norms;
      std::vector<double> inner(positions, 0.0);
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t p = 0; p < positions; ++p) inner[p] += g[c * positions + p] * yv[c * positions + p];
      }
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t p = 0; p < positions; ++p) {
          if (n[p] <= 0.0) continue;
          const auto i = c * positions + p;
          gx[i] += (g[i] - yv[i] * inner[p]) / n[p];
        }
      }
    });
  }
  return y;
}

Tensor dot(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) shape_mismatch("dot", a, b);
  auto av = a.values(), bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  auto y = make_output("dot", {}, {s}, rg);
  if (rg) {
    tape.record("dot", {a, b}, y, [a, b](std::span<const double> g) {
      auto av = a.values(), bv = b.values();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[0] * av[i];
      }
    });
  }
  return y;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  auto y = make_output("sum", {}, {s}, x.requires_grad());
  if (x.requires_grad()) {
    tape.record("sum", {x}, y, [x](std::span<const double> g) {
      for (auto& v : x.grad_buffer()) v += g[0];
    });
  }
  return y;
}

Tensor mean(Tape& tape, const Tensor& x) {
  const double n = static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x.values()) s += v;
  auto y = make_output("mean", {}, {s / n}, x.requires_grad());
  if (x.requires_grad()) {
    tape.record("mean", {x}, y, [x, n](std::span<const double> g) {
      for (auto& v : x.grad_buffer()) v += g[0] / n;
    });
  }
  return y;
}

Tensor sum_positions(Tape& tape, const Tensor& x) {
  const auto channels = channels_of(x), positions = positions_of(x);
  auto xv = x.values();
  std::vector<double> out(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < positions; ++p) out[c] += xv[c * positions + p];
  }
  auto y = make_output("sum_positions", {channels}, std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    tape.record("sum_positions", {x}, y, [x, channels, positions](std::span<const double> g) {
      auto gx = x.grad_buffer();
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t p = 0; p < positions; ++p) gx[c * positions + p] += g[c];
      }
    });
  }
  return y;
}

Tensor concat(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const auto& first = parts.front();
  if (first.rank() == 0) bad_shape("concat", first, "rank >= 1");
  Shape trailing(first.shape().begin() + 1, first.shape().end());
  std::size_t lead = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rank() != first.rank() || !std::equal(trailing.begin(), trailing.end(), p.shape().begin() + 1)) {
      shape_mismatch("concat", first, p);
    }
    lead += p.dim(0);
    rg = rg || p.requires_grad();
  }
  std::vector<double> out;
  out.reserve(lead * element_count(trailing));
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  Shape shape{lead};
  shape.insert(shape.end(), trailing.begin(), trailing.end());
  auto y = make_output("concat", std::move(shape), std::move(out), rg);
  if (rg) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record("concat", inputs, y, [inputs](std::span<const double> g) {
      std::size_t offset = 0;
      for (const auto& p : inputs) {
        const auto n = p.size();
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
        }
        offset += n;
      }
    });
  }
  return y;
}

Tensor take(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices) {
  auto xv = x.values();
  std::vector<double> out(flat_indices.size());
  for (std::size_t i = 0; i < flat_indices.size(); ++i) {
    if (flat_indices[i] >= xv.size()) {
      throw ShapeError("take: index " + std::to_string(flat_indices[i]) + " out of range for shape " +
                       to_string(x.shape()));
    }
    out[i] = xv[flat_indices[i]];
  }
  auto y = make_output("take", {flat_indices.size()}, std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
    tape.record("take", {x}, y, [x, idx = std::move(idx)](std::span<const double> g) {
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i) gx[idx[i]] += g[i];
    });
  }
  return y;
}

Tensor gather_columns(Tape& tape, const Tensor& x, std::span<const std::size_t> positions) {
  if (x.rank() < 2) bad_shape("gather_columns", x, "rank >= 2");
  const auto rows = channels_of(x), cols = positions_of(x), k = positions.size();
  auto xv = x.values();
  std::vector<double> out(rows * k);
  for (std::size_t j = 0; j < k; ++j) {
    if (positions[j] >= cols) {
      throw ShapeError("gather_columns: position " + std::to_string(positions[j]) +
                       " out of range for shape " + to_string(x.shape()));
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = xv[r * cols + positions[j]];
  }
  auto y = make_output("gather_columns", {rows, k}, std::move(out), x.requires_grad());
  if (x.requires_grad()) {
    std::vector<std::size_t> idx(positions.begin(), positions.end());
    tape.record("gather_columns", {x}, y, [x, rows, cols, idx = std::move(idx)](std::span<const double> g) {
      auto gx = x.grad_buffer();
      const auto k = idx.size();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < k; ++j) gx[r * cols + idx[j]] += g[r * k + j];
      }
    });
  }
  return y;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (element_count(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  auto xv = x.values();
  auto y = make_output("reshape", std::move(shape), std::vector<double>(xv.begin(), xv.end()), x.requires_grad());
  if (x.requires_grad()) {
    tape.record("reshape", {x}, y, [x](std::span<const double> g) {
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
  }
  return y;
}

}  // namespace spcl::tensor
