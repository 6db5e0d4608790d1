#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spcl::tensor {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

// Reference-counted handle to a row-major float64 buffer. Copies of a Tensor
// share storage; values of op outputs are never modified after creation.
// Leaf tensors (parameters) may be updated in place between steps through
// mutable_values().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(storage_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  std::size_t size() const;

  std::span<const double> values() const;
  std::span<double> mutable_values() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag) const;

  bool has_grad() const;
  std::span<const double> grad() const;
  // Zero-initialized on first access.
  std::span<double> grad_buffer() const;
  void zero_grad() const;

  // Deep copy of the values; the copy never requires grad.
  Tensor detached() const;
  bool shares_storage(const Tensor& other) const noexcept { return storage_ == other.storage_; }

 private:
  struct Storage;
  std::shared_ptr<Storage> storage_;
};

// Ordered record of executed differentiable operations. One Tape per
// training step and per thread; records are replayed in exact reverse order.
class Tape {
 public:
  using Adjoint = std::function<void(std::span<const double> output_grad)>;

  void record(std::string_view op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint);

  // Seeds d(loss)/d(loss) = 1 and accumulates into every grad-requiring
  // tensor that the tape touched. Gradients accumulate across calls.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return records_.size(); }
  std::vector<std::string_view> op_names() const;
  void clear() noexcept { records_.clear(); }

 private:
  struct Record {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    Adjoint adjoint;
  };
  std::vector<Record> records_;
};

}  // namespace spcl::tensor
