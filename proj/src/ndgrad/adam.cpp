#include "fpu/ndgrad/adam.hpp"

#include <cmath>
#include <string>

#include "fpu/error.hpp"

namespace fpu::ndgrad {

OptimizerState OptimizerState::create(std::span<const Tensor> params, AdamOptions options) {
  if (!(options.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(options.beta1 > 0.0 && options.beta1 < 1.0) || !(options.beta2 > 0.0 && options.beta2 < 1.0)) {
    throw InvalidArgument("Adam decay rates must lie in (0, 1)");
  }
  if (!(options.epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be positive");
  OptimizerState state;
  state.options = options;
  for (const Tensor& p : params) {
    state.first_moment.emplace_back(p.numel(), 0.0);
    state.second_moment.emplace_back(p.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor> params, OptimizerState& state) {
  if (params.size() != state.first_moment.size()) {
    throw InvalidState("optimizer tracks " + std::to_string(state.first_moment.size()) +
                       " parameters but was given " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) throw InvalidState("parameter " + std::to_string(i) + " has no gradient");
    if (params[i].numel() != state.first_moment[i].size()) {
      throw InvalidState("parameter " + std::to_string(i) + " changed size since optimizer creation");
    }
  }

  const AdamOptions& o = state.options;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(o.beta1, t);
  const double bias2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_values();
    auto g = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      w[k] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace fpu::ndgrad
