#include "spcl/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "spcl/error.hpp"

namespace spcl::tensor {

struct Tensor::Storage {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
};

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  if (element_count(shape) != values.size()) {
    throw ShapeError("tensor: shape " + to_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
  storage_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!storage_) throw Error("tensor: use of undefined tensor");
  return storage_->shape;
}

std::size_t Tensor::size() const { return shape().empty() ? 1 : element_count(shape()); }

std::span<const double> Tensor::values() const {
  if (!storage_) throw Error("tensor: use of undefined tensor");
  return storage_->values;
}

std::span<double> Tensor::mutable_values() const {
  if (!storage_) throw Error("tensor: use of undefined tensor");
  return storage_->values;
}

double Tensor::item() const {
  auto v = values();
  if (v.size() != 1) throw ShapeError("item: tensor of shape " + to_string(shape()) + " is not a scalar");
  return v[0];
}

bool Tensor::requires_grad() const { return storage_ && storage_->requires_grad; }

void Tensor::set_requires_grad(bool flag) const {
  if (!storage_) throw Error("tensor: use of undefined tensor");
  storage_->requires_grad = flag;
}

bool Tensor::has_grad() const { return storage_ && !storage_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!storage_) throw Error("tensor: use of undefined tensor");
  return storage_->grad;
}

std::span<double> Tensor::grad_buffer() const {
  if (!storage_) throw Error("tensor: use of undefined tensor");
  if (storage_->grad.empty()) storage_->grad.assign(storage_->values.size(), 0.0);
  return storage_->grad;
}

void Tensor::zero_grad() const {
  if (storage_) storage_->grad.clear();
}

Tensor Tensor::detached() const {
  return Tensor(shape(), std::vector<double>(values().begin(), values().end()), false);
}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint) {
  records_.push_back(Record{op, std::move(inputs), std::move(output), std::move(adjoint)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw Error("backward: loss was not produced by taped operations");
  }
  for (const auto& rec : records_) {
    for (const auto& in : rec.inputs) {
      if (in.requires_grad()) in.grad_buffer();
    }
  }
  loss.grad_buffer()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->adjoint(it->output.grad());
  }
}

std::vector<std::string_view> Tape::op_names() const {
  std::vector<std::string_view> names;
  names.reserve(records_.size());
  for (const auto& r : records_) names.push_back(r.op);
  return names;
}

}  // namespace spcl::tensor
