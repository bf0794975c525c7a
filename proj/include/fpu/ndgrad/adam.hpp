#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fpu/ndgrad/tensor.hpp"

namespace fpu::ndgrad {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamOptions options;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;

  // Validates the options and sizes the accumulators to `params`.
  static OptimizerState create(std::span<const Tensor> params, AdamOptions options = {});
};

// One bias-corrected Adam update. Gradients are read, never cleared.
// Throws InvalidState if a parameter has no gradient or the accumulators no
// longer match the parameter shapes.
void adam_step(std::span<Tensor> params, OptimizerState& state);

}  // namespace fpu::ndgrad
