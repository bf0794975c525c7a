#include "fpu/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fpu/error.hpp"

namespace fpu::losses {

namespace {

using ndgrad::Shape;
using ndgrad::shape_to_string;

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                          shape_to_string(b.shape()));
  }
}

void require_log_var_bounds(const Tensor& log_var) {
  for (double s : log_var.values()) {
    if (!(s >= -10.0 && s <= 10.0)) throw InvalidArgument("log-variance outside the clamp range [-10, 10]");
  }
}

void require_binary_mask(const Tensor& logits, const Tensor& mask, const char* what) {
  if (logits.rank() != 4 || logits.dim(1) != 2) {
    throw InvalidArgument(std::string(what) + ": logits must be [N,2,H,W], got " + shape_to_string(logits.shape()));
  }
  const Shape expected{logits.dim(0), 1, logits.dim(2), logits.dim(3)};
  if (mask.shape() != expected) {
    throw InvalidArgument(std::string(what) + ": mask must be " + shape_to_string(expected) + ", got " +
                          shape_to_string(mask.shape()));
  }
  for (double m : mask.values()) {
    if (m != 0.0 && m != 1.0) throw InvalidArgument(std::string(what) + ": target mask must be binary");
  }
}

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

}  // namespace

LossValue heteroscedastic_regression_loss(Tape& tape, const Tensor& pred, const Tensor& log_var,
                                          const Tensor& target) {
  require_same_shape(pred, target, "heteroscedastic_regression_loss");
  require_same_shape(pred, log_var, "heteroscedastic_regression_loss");
  require_log_var_bounds(log_var);
  Tensor residual = ndgrad::sub(tape, target, pred);
  Tensor squared = ndgrad::mul(tape, residual, residual);
  Tensor precision = ndgrad::exp(tape, ndgrad::neg(tape, log_var));
  Tensor per_pixel = ndgrad::affine(tape, ndgrad::add(tape, ndgrad::mul(tape, precision, squared), log_var), 0.5);
  return {ndgrad::mean(tape, per_pixel), per_pixel};
}

LossValue heteroscedastic_classification_loss(Tape& tape, const Tensor& logits, const Tensor& log_var,
                                              const Tensor& target_mask, std::size_t samples, Rng& rng) {
  if (samples < 1) throw InvalidArgument("heteroscedastic_classification_loss needs at least one sample");
  require_binary_mask(logits, target_mask, "heteroscedastic_classification_loss");
  require_same_shape(target_mask, log_var, "heteroscedastic_classification_loss");
  require_log_var_bounds(log_var);

  const std::size_t n = logits.dim(0);
  const std::size_t hw = logits.dim(2) * logits.dim(3);
  const std::size_t pixels = n * hw;
  const double log_samples = std::log(static_cast<double>(samples));

  // eps[(t * pixels + i) * 2 + c]
  std::vector<double> eps(samples * pixels * 2);
  for (std::size_t k = 0; k < samples * pixels; ++k) {
    const auto [e0, e1] = rng.normal_pair();
    eps[2 * k] = e0;
    eps[2 * k + 1] = e1;
  }

  const auto l = logits.values();
  const auto s = log_var.values();
  const auto y = target_mask.values();
  std::vector<double> out(pixels);
  std::vector<double> log_probs(samples);
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t p = 0; p < hw; ++p) {
      const std::size_t i = img * hw + p;
      const std::size_t cls = y[i] == 1.0 ? 1 : 0;
      const double sigma = std::exp(0.5 * s[i]);
      const double l0 = l[(img * 2) * hw + p];
      const double l1 = l[(img * 2 + 1) * hw + p];
      double acc = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < samples; ++t) {
        const double x0 = l0 + sigma * eps[(t * pixels + i) * 2];
        const double x1 = l1 + sigma * eps[(t * pixels + i) * 2 + 1];
        log_probs[t] = (cls == 1 ? x1 : x0) - log_add_exp(x0, x1);
        acc = log_add_exp(acc, log_probs[t]);
      }
      out[i] = -(acc - log_samples);
    }
  }
  Tensor per_pixel(target_mask.shape(), std::move(out));

  if (tape.needs_grad({&logits, &log_var})) {
    tape.record({logits, log_var}, per_pixel,
                [logits = Tensor(logits), log_var = Tensor(log_var), mask = Tensor(target_mask), per_pixel, samples,
                 n, hw, eps = std::move(eps)]() mutable {
                  const std::size_t pixels = n * hw;
                  const auto g = per_pixel.grad();
                  const auto loss = per_pixel.values();
                  const auto l = logits.values();
                  const auto s = log_var.values();
                  const auto y = mask.values();
                  const double log_samples = std::log(static_cast<double>(samples));
                  std::span<double> gl, gs;
                  if (logits.requires_grad()) gl = logits.mutable_grad();
                  if (log_var.requires_grad()) gs = log_var.mutable_grad();
                  for (std::size_t img = 0; img < n; ++img) {
                    for (std::size_t p = 0; p < hw; ++p) {
                      const std::size_t i = img * hw + p;
                      const std::size_t cls = y[i] == 1.0 ? 1 : 0;
                      const double sigma = std::exp(0.5 * s[i]);
                      const double l0 = l[(img * 2) * hw + p];
                      const double l1 = l[(img * 2 + 1) * hw + p];
                      // log of the sum over draws of probabilities = log T - loss.
                      const double log_total = log_samples - loss[i];
                      double d0 = 0.0, d1 = 0.0, dsigma = 0.0;
                      for (std::size_t t = 0; t < samples; ++t) {
                        const double e0 = eps[(t * pixels + i) * 2];
                        const double e1 = eps[(t * pixels + i) * 2 + 1];
                        const double x0 = l0 + sigma * e0;
                        const double x1 = l1 + sigma * e1;
                        const double lse = log_add_exp(x0, x1);
                        const double log_prob = (cls == 1 ? x1 : x0) - lse;
                        const double weight = std::exp(log_prob - log_total);
                        const double p1 = std::exp(x1 - lse);
                        const double p0 = 1.0 - p1;
                        // d(log_prob)/d(x_c) = [c == cls] - p_c
                        const double r0 = (cls == 0 ? 1.0 : 0.0) - p0;
                        const double r1 = (cls == 1 ? 1.0 : 0.0) - p1;
                        d0 += weight * r0;
                        d1 += weight * r1;
                        dsigma += weight * (r0 * e0 + r1 * e1);
                      }
                      if (!gl.empty()) {
                        gl[(img * 2) * hw + p] -= g[i] * d0;
                        gl[(img * 2 + 1) * hw + p] -= g[i] * d1;
                      }
                      if (!gs.empty()) gs[i] -= g[i] * dsigma * 0.5 * sigma;
                    }
                  }
                });
  }
  return {ndgrad::mean(tape, per_pixel), per_pixel};
}

LossValue mse_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  Tensor residual = ndgrad::sub(tape, pred, target);
  Tensor squared = ndgrad::mul(tape, residual, residual);
  LossValue value{ndgrad::mean(tape, squared), std::nullopt};
  if (squared.rank() == 4 && squared.dim(1) == 1) value.per_pixel = squared;
  return value;
}

LossValue cross_entropy_loss(Tape& tape, const Tensor& logits, const Tensor& target_mask) {
  require_binary_mask(logits, target_mask, "cross_entropy_loss");
  const std::size_t n = logits.dim(0);
  const std::size_t hw = logits.dim(2) * logits.dim(3);
  std::vector<double> onehot(logits.numel(), 0.0);
  const auto y = target_mask.values();
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t p = 0; p < hw; ++p) {
      const std::size_t cls = y[img * hw + p] == 1.0 ? 1 : 0;
      onehot[(img * 2 + cls) * hw + p] = 1.0;
    }
  }
  Tensor selector(logits.shape(), std::move(onehot));
  Tensor true_logit = ndgrad::sum_axis(tape, ndgrad::mul(tape, logits, selector), 1);
  Tensor per_pixel = ndgrad::sub(tape, ndgrad::log_sum_exp(tape, logits, 1), true_logit);
  return {ndgrad::mean(tape, per_pixel), per_pixel};
}

}  // namespace fpu::losses
