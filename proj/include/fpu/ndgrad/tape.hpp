#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "fpu/ndgrad/tensor.hpp"

namespace fpu::ndgrad {

// Define-by-run record of differentiable operations.
//
// Operations append an entry when a tape is recording and at least one input
// requires a gradient. Entries are stored in creation order, so every entry's
// inputs were produced before its output and a reverse sweep is a valid
// topological order.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  using BackwardFn = std::function<void()>;

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const noexcept { return mode_ == Mode::kRecord; }

  // True when an op over `inputs` has to register a backward rule.
  bool needs_grad(std::initializer_list<const Tensor*> inputs) const;

  // Marks `output` as a non-leaf requiring grad and appends the rule. The rule
  // reads output.grad() and accumulates into the inputs that require grad.
  void record(std::vector<Tensor> inputs, Tensor& output, BackwardFn backward);

  std::size_t size() const noexcept { return entries_.size(); }
  void clear() noexcept { entries_.clear(); }

  // Populates d(loss)/d(t) for every tensor on the tape that requires grad.
  // Intermediate gradients are reset on each call; leaf gradients accumulate.
  void backward(const Tensor& loss);

 private:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  Mode mode_;
  std::vector<Entry> entries_;
};

inline void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace fpu::ndgrad
