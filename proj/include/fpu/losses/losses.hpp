#pragma once

#include <cstddef>
#include <optional>

#include "fpu/ndgrad/ops.hpp"

namespace fpu::losses {

using ndgrad::Rng;
using ndgrad::Tape;
using ndgrad::Tensor;

struct LossValue {
  Tensor scalar;                    // shape [1], mean of per_pixel
  std::optional<Tensor> per_pixel;  // [N,1,H,W]
};

// Noise-aware regression objective with s = log sigma^2 per pixel:
//   0.5 * exp(-s) * (y - f)^2 + 0.5 * s, averaged over pixels.
// log_var must already lie in [-10, 10].
LossValue heteroscedastic_regression_loss(Tape& tape, const Tensor& pred, const Tensor& log_var,
                                          const Tensor& target);

// Noise-aware classification objective. For every pixel, `samples` standard
// normal pairs eps_t perturb both logits by exp(s/2) * eps_t; the per-pixel
// loss is the negative log of the mean softmax probability of the true class
// across draws, evaluated as log-mean-exp of per-draw log-softmax values.
// Gradients flow through the draws (reparameterisation), which are taken from
// `rng` in (draw, image, pixel) order.
LossValue heteroscedastic_classification_loss(Tape& tape, const Tensor& logits, const Tensor& log_var,
                                              const Tensor& target_mask, std::size_t samples, Rng& rng);

LossValue mse_loss(Tape& tape, const Tensor& pred, const Tensor& target);

// Mean over pixels of -log softmax(logits)[true class], logits [N,2,H,W].
LossValue cross_entropy_loss(Tape& tape, const Tensor& logits, const Tensor& target_mask);

}  // namespace fpu::losses
