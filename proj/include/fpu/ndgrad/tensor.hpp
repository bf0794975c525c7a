#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fpu::ndgrad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major array of doubles with an optional gradient buffer.
//
// Tensor is a shared handle: copies alias the same storage, which is what
// lets the tape hold references to intermediate results. Use clone() for an
// independent copy.
class Tensor {
 public:
  // A scalar zero; mostly useful as a placeholder before assignment.
  Tensor();
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const noexcept { return impl_->shape; }
  std::size_t rank() const noexcept { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const noexcept { return impl_->values.size(); }

  std::span<const double> values() const noexcept { return impl_->values; }
  std::span<double> mutable_values() noexcept { return impl_->values; }
  double item() const;

  bool requires_grad() const noexcept { return impl_->requires_grad; }
  void set_requires_grad(bool flag);
  // False for tensors produced by a recorded operation.
  bool is_leaf() const noexcept { return impl_->leaf; }

  bool has_grad() const noexcept { return impl_->has_grad; }
  std::span<const double> grad() const;
  // Allocates a zero gradient on first use.
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }
  // Independent copy of shape and values, detached from any tape.
  Tensor clone() const;

 private:
  struct Impl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool leaf = true;
  };

  std::shared_ptr<Impl> impl_;

  friend class Tape;
};

}  // namespace fpu::ndgrad
