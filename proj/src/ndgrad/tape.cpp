#include "fpu/ndgrad/tape.hpp"

#include <algorithm>

#include "fpu/error.hpp"

namespace fpu::ndgrad {

bool Tape::needs_grad(std::initializer_list<const Tensor*> inputs) const {
  if (!recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t != nullptr && t->requires_grad(); });
}

void Tape::record(std::vector<Tensor> inputs, Tensor& output, BackwardFn backward) {
  output.impl_->requires_grad = true;
  output.impl_->leaf = false;
  entries_.push_back(Entry{std::move(inputs), output, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw InvalidArgument("backward needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  for (Entry& e : entries_) {
    auto g = e.output.mutable_grad();
    std::fill(g.begin(), g.end(), 0.0);
  }
  if (!loss.requires_grad()) return;
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward();
}

}  // namespace fpu::ndgrad
