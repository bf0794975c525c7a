#include "fpu/ndgrad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "fpu/error.hpp"

namespace fpu::ndgrad {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw InvalidArgument("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void require_rank4(const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw InvalidArgument(std::string(what) + " expects a rank-4 [N,C,H,W] tensor, got " +
                          shape_to_string(t.shape()));
  }
}

}  // namespace

bool is_binary(Elementwise kind) {
  return kind == Elementwise::kAdd || kind == Elementwise::kSub || kind == Elementwise::kMul;
}

const char* to_string(Elementwise kind) {
  switch (kind) {
    case Elementwise::kAdd: return "add";
    case Elementwise::kSub: return "sub";
    case Elementwise::kMul: return "mul";
    case Elementwise::kRelu: return "relu";
    case Elementwise::kSigmoid: return "sigmoid";
    case Elementwise::kExp: return "exp";
    case Elementwise::kLog: return "log";
    case Elementwise::kNegate: return "negate";
  }
  return "unknown";
}

Tensor elementwise(Tape& tape, Elementwise kind, const Tensor& a, const Tensor& b) {
  if (!is_binary(kind)) throw InvalidArgument(std::string(to_string(kind)) + " is a unary operation");
  const bool broadcast = b.numel() == 1 && a.numel() != 1;
  if (!broadcast && a.shape() != b.shape()) {
    throw InvalidArgument(std::string(to_string(kind)) + ": shape mismatch " + shape_to_string(a.shape()) +
                          " vs " + shape_to_string(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  const std::size_t n = av.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = broadcast ? bv[0] : bv[i];
    switch (kind) {
      case Elementwise::kAdd: out[i] = av[i] + y; break;
      case Elementwise::kSub: out[i] = av[i] - y; break;
      default: out[i] = av[i] * y; break;
    }
  }
  Tensor result(a.shape(), std::move(out));
  if (tape.needs_grad({&a, &b})) {
    tape.record({a, b}, result, [a = Tensor(a), b = Tensor(b), result, kind, broadcast]() mutable {
      const auto g = result.grad();
      const std::size_t n = g.size();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        const auto bv = b.values();
        for (std::size_t i = 0; i < n; ++i) {
          ga[i] += kind == Elementwise::kMul ? g[i] * (broadcast ? bv[0] : bv[i]) : g[i];
        }
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        const auto av = a.values();
        const double sign = kind == Elementwise::kSub ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double contrib = kind == Elementwise::kMul ? g[i] * av[i] : sign * g[i];
          gb[broadcast ? 0 : i] += contrib;
        }
      }
    });
  }
  return result;
}

Tensor elementwise(Tape& tape, Elementwise kind, const Tensor& a) {
  if (is_binary(kind)) throw InvalidArgument(std::string(to_string(kind)) + " needs a second operand");
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    switch (kind) {
      case Elementwise::kRelu: out[i] = x < 0.0 ? 0.0 : x; break;
      case Elementwise::kSigmoid: out[i] = stable_sigmoid(x); break;
      case Elementwise::kExp: out[i] = std::exp(x); break;
      case Elementwise::kLog: out[i] = std::log(x); break;
      default: out[i] = -x; break;
    }
  }
  Tensor result(a.shape(), std::move(out));
  if (tape.needs_grad({&a})) {
    tape.record({a}, result, [a = Tensor(a), result, kind]() mutable {
      const auto g = result.grad();
      const auto x = a.values();
      const auto y = result.values();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d = 0.0;
        switch (kind) {
          case Elementwise::kRelu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
          case Elementwise::kSigmoid: d = y[i] * (1.0 - y[i]); break;
          case Elementwise::kExp: d = y[i]; break;
          case Elementwise::kLog: d = 1.0 / x[i]; break;
          default: d = -1.0; break;
        }
        ga[i] += g[i] * d;
      }
    });
  }
  return result;
}

Tensor affine(Tape& tape, const Tensor& a, double factor, double offset) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor + offset;
  Tensor result(a.shape(), std::move(out));
  if (tape.needs_grad({&a})) {
    tape.record({a}, result, [a = Tensor(a), result, factor]() mutable {
      const auto g = result.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return result;
}

Tensor clamp(Tape& tape, const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("clamp bounds must satisfy lo <= hi");
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::clamp(av[i], lo, hi);
  Tensor result(a.shape(), std::move(out));
  if (tape.needs_grad({&a})) {
    tape.record({a}, result, [a = Tensor(a), result, lo, hi]() mutable {
      const auto g = result.grad();
      const auto x = a.values();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
      }
    });
  }
  return result;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor result = Tensor::scalar(total);
  if (tape.needs_grad({&a})) {
    tape.record({a}, result, [a = Tensor(a), result]() mutable {
      const double g = result.grad()[0];
      for (double& ga : a.mutable_grad()) ga += g;
    });
  }
  return result;
}

Tensor mean(Tape& tape, const Tensor& a) {
  return affine(tape, sum(tape, a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_axis(Tape& tape, const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = 1;
  const auto av = a.values();
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.length; ++k) {
      const double* src = av.data() + (o * s.length + k) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t j = 0; j < s.inner; ++j) dst[j] += src[j];
    }
  }
  Tensor result(std::move(out_shape), std::move(out));
  if (tape.needs_grad({&a})) {
    tape.record({a}, result, [a = Tensor(a), result, s]() mutable {
      const auto g = result.grad();
      auto ga = a.mutable_grad();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t k = 0; k < s.length; ++k) {
          double* dst = ga.data() + (o * s.length + k) * s.inner;
          const double* src = g.data() + o * s.inner;
          for (std::size_t j = 0; j < s.inner; ++j) dst[j] += src[j];
        }
      }
    });
  }
  return result;
}

Tensor log_sum_exp(Tape& tape, const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = 1;
  const auto av = a.values();
  std::vector<double> out(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.inner; ++j) {
      const double* base = av.data() + o * s.length * s.inner + j;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.length; ++k) peak = std::max(peak, base[k * s.inner]);
      double acc = 0.0;
      for (std::size_t k = 0; k < s.length; ++k) acc += std::exp(base[k * s.inner] - peak);
      out[o * s.inner + j] = peak + std::log(acc);
    }
  }
  Tensor result(std::move(out_shape), std::move(out));
  if (tape.needs_grad({&a})) {
    tape.record({a}, result, [a = Tensor(a), result, s]() mutable {
      const auto g = result.grad();
      const auto y = result.values();
      const auto x = a.values();
      auto ga = a.mutable_grad();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t k = 0; k < s.length; ++k) {
          for (std::size_t j = 0; j < s.inner; ++j) {
            const std::size_t src = (o * s.length + k) * s.inner + j;
            const std::size_t red = o * s.inner + j;
            ga[src] += g[red] * std::exp(x[src] - y[red]);
          }
        }
      }
    });
  }
  return result;
}

Tensor max_pool2d(Tape& tape, const Tensor& input, std::size_t window) {
  require_rank4(input, "max_pool2d");
  if (window == 0) throw InvalidArgument("max_pool2d window must be >= 1");
  const auto& sh = input.shape();
  const std::size_t n = sh[0], c = sh[1], h = sh[2], w = sh[3];
  if (h % window != 0 || w % window != 0) {
    throw InvalidArgument("max_pool2d: spatial size " + shape_to_string(sh) + " not divisible by window " +
                          std::to_string(window));
  }
  const std::size_t oh = h / window, ow = w / window;
  const auto x = input.values();
  std::vector<double> out(n * c * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t in_base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = in_base + oy * window * w + ox * window;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx = in_base + (oy * window + dy) * w + ox * window + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = plane * oh * ow + oy * ow + ox;
        out[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  Tensor result(Shape{n, c, oh, ow}, std::move(out));
  if (tape.needs_grad({&input})) {
    tape.record({input}, result, [input = Tensor(input), result, argmax = std::move(argmax)]() mutable {
      const auto g = result.grad();
      auto gi = input.mutable_grad();
      for (std::size_t o = 0; o < g.size(); ++o) gi[argmax[o]] += g[o];
    });
  }
  return result;
}

Tensor upsample_nearest(Tape& tape, const Tensor& input, std::size_t factor) {
  require_rank4(input, "upsample_nearest");
  if (factor < 1) throw InvalidArgument("upsample factor must be >= 1");
  if (factor == 1) return input;
  const auto& sh = input.shape();
  const std::size_t n = sh[0], c = sh[1], h = sh[2], w = sh[3];
  const std::size_t oh = h * factor, ow = w * factor;
  const auto x = input.values();
  std::vector<double> out(n * c * oh * ow);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    for (std::size_t y = 0; y < oh; ++y) {
      const double* src = x.data() + plane * h * w + (y / factor) * w;
      double* dst = out.data() + plane * oh * ow + y * ow;
      for (std::size_t xo = 0; xo < ow; ++xo) dst[xo] = src[xo / factor];
    }
  }
  Tensor result(Shape{n, c, oh, ow}, std::move(out));
  if (tape.needs_grad({&input})) {
    tape.record({input}, result, [input = Tensor(input), result, n, c, h, w, factor]() mutable {
      const auto g = result.grad();
      auto gi = input.mutable_grad();
      const std::size_t oh = h * factor, ow = w * factor;
      for (std::size_t plane = 0; plane < n * c; ++plane) {
        for (std::size_t y = 0; y < oh; ++y) {
          const double* src = g.data() + plane * oh * ow + y * ow;
          double* dst = gi.data() + plane * h * w + (y / factor) * w;
          for (std::size_t xo = 0; xo < ow; ++xo) dst[xo / factor] += src[xo];
        }
      }
    });
  }
  return result;
}

Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
    throw InvalidArgument("concat_channels: incompatible shapes " + shape_to_string(sa) + " and " +
                          shape_to_string(sb));
  }
  const std::size_t n = sa[0], ca = sa[1], cb = sb[1], hw = sa[2] * sa[3];
  std::vector<double> out(n * (ca + cb) * hw);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.data() + i * ca * hw, ca * hw, out.data() + i * (ca + cb) * hw);
    std::copy_n(bv.data() + i * cb * hw, cb * hw, out.data() + i * (ca + cb) * hw + ca * hw);
  }
  Tensor result(Shape{n, ca + cb, sa[2], sa[3]}, std::move(out));
  if (tape.needs_grad({&a, &b})) {
    tape.record({a, b}, result, [a = Tensor(a), b = Tensor(b), result, n, ca, cb, hw]() mutable {
      const auto g = result.grad();
      for (std::size_t i = 0; i < n; ++i) {
        const double* src = g.data() + i * (ca + cb) * hw;
        if (a.requires_grad()) {
          auto ga = a.mutable_grad();
          for (std::size_t k = 0; k < ca * hw; ++k) ga[i * ca * hw + k] += src[k];
        }
        if (b.requires_grad()) {
          auto gb = b.mutable_grad();
          for (std::size_t k = 0; k < cb * hw; ++k) gb[i * cb * hw + k] += src[ca * hw + k];
        }
      }
    });
  }
  return result;
}

Tensor dropout(Tape& tape, const Tensor& input, double rate, bool active, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  if (!active || rate == 0.0) return input;
  const double keep_scale = 1.0 / (1.0 - rate);
  const auto x = input.values();
  const bool record = tape.needs_grad({&input});
  std::vector<double> mask(record ? x.size() : 0);
  std::vector<double> out(x.size());
  // Each 64-bit draw decides two elements through its 32-bit halves.
  const auto threshold = static_cast<std::uint64_t>(std::ceil(rate * 0x1.0p32));
  Rng local = rng;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const std::uint64_t r = local.next_u64();
    const double m0 = static_cast<double>((r >> 32) >= threshold) * keep_scale;
    out[i] = x[i] * m0;
    if (record) mask[i] = m0;
    if (i + 1 < n) {
      const double m1 = static_cast<double>((r & 0xFFFFFFFFULL) >= threshold) * keep_scale;
      out[i + 1] = x[i + 1] * m1;
      if (record) mask[i + 1] = m1;
    }
  }
  rng = local;
  Tensor result(input.shape(), std::move(out));
  if (record) {
    tape.record({input}, result, [input = Tensor(input), result, mask = std::move(mask)]() mutable {
      const auto g = result.grad();
      auto gi = input.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * mask[i];
    });
  }
  return result;
}

}  // namespace fpu::ndgrad
