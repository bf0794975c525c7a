#include "fpu/ndgrad/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "fpu/error.hpp"

namespace fpu::ndgrad {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw InvalidArgument("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw InvalidArgument("tensor shape " + shape_to_string(shape) + " has a zero dimension");
  }
}

}  // namespace

Tensor::Tensor() : Tensor(Shape{1}, std::vector<double>{0.0}) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw InvalidArgument("tensor of shape " + shape_to_string(shape) + " given " +
                          std::to_string(values.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  validate_shape(shape);
  std::vector<double> values(shape_numel(shape), value);
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<double>{value}, requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw InvalidArgument("axis " + std::to_string(axis) + " out of range for shape " +
                          shape_to_string(impl_->shape));
  }
  return impl_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) throw InvalidArgument("item() on tensor of shape " + shape_to_string(shape()));
  return impl_->values[0];
}

void Tensor::set_requires_grad(bool flag) { impl_->requires_grad = flag; }

std::span<const double> Tensor::grad() const {
  if (!impl_->has_grad) throw InvalidState("tensor has no gradient");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!impl_->has_grad) {
    impl_->grad.assign(impl_->values.size(), 0.0);
    impl_->has_grad = true;
  }
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_->has_grad) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void Tensor::clear_grad() {
  impl_->grad.clear();
  impl_->grad.shrink_to_fit();
  impl_->has_grad = false;
}

Tensor Tensor::clone() const { return Tensor(impl_->shape, impl_->values, false); }

}  // namespace fpu::ndgrad
