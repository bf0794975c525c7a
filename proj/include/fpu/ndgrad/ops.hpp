#pragma once

#include <cstddef>

#include "fpu/ndgrad/rng.hpp"
#include "fpu/ndgrad/tape.hpp"
#include "fpu/ndgrad/tensor.hpp"

// Differentiable operations. Each takes the tape explicitly; on an inference
// tape nothing is recorded and results never require grad.
namespace fpu::ndgrad {

enum class Elementwise { kAdd, kSub, kMul, kRelu, kSigmoid, kExp, kLog, kNegate };

bool is_binary(Elementwise kind);
const char* to_string(Elementwise kind);

// Binary kinds accept `b` of the same shape as `a`, or a one-element `b`
// broadcast as a scalar.
Tensor elementwise(Tape& tape, Elementwise kind, const Tensor& a, const Tensor& b);
Tensor elementwise(Tape& tape, Elementwise kind, const Tensor& a);

inline Tensor add(Tape& t, const Tensor& a, const Tensor& b) { return elementwise(t, Elementwise::kAdd, a, b); }
inline Tensor sub(Tape& t, const Tensor& a, const Tensor& b) { return elementwise(t, Elementwise::kSub, a, b); }
inline Tensor mul(Tape& t, const Tensor& a, const Tensor& b) { return elementwise(t, Elementwise::kMul, a, b); }
inline Tensor relu(Tape& t, const Tensor& a) { return elementwise(t, Elementwise::kRelu, a); }
inline Tensor sigmoid(Tape& t, const Tensor& a) { return elementwise(t, Elementwise::kSigmoid, a); }
inline Tensor exp(Tape& t, const Tensor& a) { return elementwise(t, Elementwise::kExp, a); }
inline Tensor log(Tape& t, const Tensor& a) { return elementwise(t, Elementwise::kLog, a); }
inline Tensor neg(Tape& t, const Tensor& a) { return elementwise(t, Elementwise::kNegate, a); }

// a * factor + offset, with constant factor and offset.
Tensor affine(Tape& tape, const Tensor& a, double factor, double offset = 0.0);

// Elementwise clamp; the gradient is passed where lo <= a <= hi and zero elsewhere.
Tensor clamp(Tape& tape, const Tensor& a, double lo, double hi);

Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);
// Sum over one axis, keeping it with size 1.
Tensor sum_axis(Tape& tape, const Tensor& a, std::size_t axis);

// log(sum(exp(a))) over `axis`, which is kept with size 1. Computed with the
// per-slice maximum subtracted first.
Tensor log_sum_exp(Tape& tape, const Tensor& a, std::size_t axis);

// Cross-correlation of input [N,C,H,W] with kernel [K,C,kh,kw] plus bias [K].
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t padding = 0, std::size_t stride = 1);

// Non-overlapping window maximum, [N,C,H,W] -> [N,C,H/k,W/k].
Tensor max_pool2d(Tape& tape, const Tensor& input, std::size_t window = 2);

// Nearest-neighbour upsampling, each pixel becoming a factor x factor block.
Tensor upsample_nearest(Tape& tape, const Tensor& input, std::size_t factor);

// Concatenation of [N,Ca,H,W] and [N,Cb,H,W] along the channel axis.
Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b);

// Inverted dropout: when active each element is zeroed with probability
// `rate` and survivors are scaled by 1/(1-rate). Inactive or rate 0 returns
// the input handle unchanged.
Tensor dropout(Tape& tape, const Tensor& input, double rate, bool active, Rng& rng);

}  // namespace fpu::ndgrad
