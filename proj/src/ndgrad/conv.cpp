#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fpu/error.hpp"
#include "fpu/ndgrad/ops.hpp"

namespace fpu::ndgrad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

struct ConvGeometry {
  std::size_t n, c, h, w;
  std::size_t k, kh, kw;
  std::size_t padding, stride;
  std::size_t oh, ow;

  std::size_t patch() const { return c * kh * kw; }
  std::size_t out_pixels() const { return oh * ow; }
};

using Band = std::pair<std::size_t, std::size_t>;

// Column buffers are built one band of output rows at a time so that they
// stay cache resident.
constexpr std::size_t kBandBytes = 256 * 1024;

std::vector<Band> bands(const ConvGeometry& g) {
  const std::size_t row_bytes = g.patch() * g.ow * sizeof(double);
  const std::size_t rows = std::max<std::size_t>(1, kBandBytes / row_bytes);
  std::vector<Band> out;
  for (std::size_t r = 0; r < g.oh; r += rows) out.emplace_back(r, std::min(g.oh, r + rows));
  return out;
}

Band clip(Band range, Band band) {
  const std::size_t lo = std::max(range.first, band.first);
  return {lo, std::max(lo, std::min(range.second, band.second))};
}

// Output columns [lo, hi) whose input column ox * stride + k - pad is in bounds.
std::pair<std::size_t, std::size_t> valid_range(std::size_t k, const ConvGeometry& g, std::size_t in, std::size_t out) {
  const long pad = static_cast<long>(g.padding);
  const long s = static_cast<long>(g.stride);
  const long first = pad - static_cast<long>(k);  // smallest ox * stride allowed
  const long lo = first <= 0 ? 0 : (first + s - 1) / s;
  const long last = static_cast<long>(in) - 1 + pad - static_cast<long>(k);
  const long hi = last < 0 ? 0 : last / s + 1;
  const auto clamp = [&](long v) { return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(out))); };
  return {clamp(lo), std::max(clamp(lo), clamp(hi))};
}

// Unrolls output rows [band.first, band.second) of one image [C,H,W] into
// columns [C*kh*kw, rows*ow].
void im2col(const double* image, const ConvGeometry& g, Band band, double* cols) {
  const std::size_t pitch = (band.second - band.first) * g.ow;
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const auto [oy_lo, oy_hi] = clip(valid_range(ky, g, g.h, g.oh), band);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const auto [ox_lo, ox_hi] = valid_range(kx, g, g.w, g.ow);
        double* row = cols + ((ch * g.kh + ky) * g.kw + kx) * pitch - band.first * g.ow;
        std::fill(row + band.first * g.ow, row + oy_lo * g.ow, 0.0);
        std::fill(row + oy_hi * g.ow, row + band.second * g.ow, 0.0);
        for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
          double* dst = row + oy * g.ow;
          const double* src = image + (ch * g.h + oy * g.stride + ky - g.padding) * g.w + kx - g.padding;
          std::fill(dst, dst + ox_lo, 0.0);
          std::fill(dst + ox_hi, dst + g.ow, 0.0);
          if (g.stride == 1) {
            std::copy(src + ox_lo, src + ox_hi, dst + ox_lo);
          } else {
            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) dst[ox] = src[ox * g.stride];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto the image gradient.
void col2im_add(const double* cols, const ConvGeometry& g, Band band, double* image_grad) {
  const std::size_t pitch = (band.second - band.first) * g.ow;
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const auto [oy_lo, oy_hi] = clip(valid_range(ky, g, g.h, g.oh), band);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const auto [ox_lo, ox_hi] = valid_range(kx, g, g.w, g.ow);
        const double* row = cols + ((ch * g.kh + ky) * g.kw + kx) * pitch - band.first * g.ow;
        for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
          const double* src = row + oy * g.ow;
          double* dst = image_grad + (ch * g.h + oy * g.stride + ky - g.padding) * g.w + kx - g.padding;
          for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) dst[ox * g.stride] += src[ox];
        }
      }
    }
  }
}

std::size_t output_extent(std::size_t in, std::size_t k, std::size_t padding, std::size_t stride,
                          const char* axis) {
  const std::size_t padded = in + 2 * padding;
  if (padded < k || (padded - k) % stride != 0) {
    throw InvalidArgument(std::string("conv2d: non-integral output ") + axis + " for extent " + std::to_string(in) +
                          ", kernel " + std::to_string(k) + ", padding " + std::to_string(padding) +
                          ", stride " + std::to_string(stride));
  }
  return (padded - k) / stride + 1;
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t padding,
              std::size_t stride) {
  if (input.rank() != 4 || kernel.rank() != 4 || bias.rank() != 1) {
    throw InvalidArgument("conv2d expects input [N,C,H,W], kernel [K,C,kh,kw], bias [K]; got " +
                          shape_to_string(input.shape()) + ", " + shape_to_string(kernel.shape()) + ", " +
                          shape_to_string(bias.shape()));
  }
  if (stride == 0) throw InvalidArgument("conv2d stride must be >= 1");
  ConvGeometry g{};
  g.n = input.dim(0);
  g.c = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.k = kernel.dim(0);
  g.kh = kernel.dim(2);
  g.kw = kernel.dim(3);
  g.padding = padding;
  g.stride = stride;
  if (kernel.dim(1) != g.c) {
    throw InvalidArgument("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input channels, input has " +
                          std::to_string(g.c));
  }
  if (bias.dim(0) != g.k) throw InvalidArgument("conv2d: bias length does not match kernel count");
  if (g.kh % 2 == 0 || g.kw % 2 == 0) throw InvalidArgument("conv2d: kernel extents must be odd");
  g.oh = output_extent(g.h, g.kh, padding, stride, "height");
  g.ow = output_extent(g.w, g.kw, padding, stride, "width");

  const std::size_t patch = g.patch();
  const std::size_t pixels = g.out_pixels();
  const std::vector<Band> row_bands = bands(g);
  std::vector<double> cols(patch * (row_bands[0].second - row_bands[0].first) * g.ow);
  std::vector<double> out(g.n * g.k * pixels);
  const ConstMatrixMap weights(kernel.values().data(), g.k, patch);
  const ConstVectorMap b(bias.values().data(), g.k);
  for (std::size_t i = 0; i < g.n; ++i) {
    MatrixMap y(out.data() + i * g.k * pixels, g.k, pixels);
    for (const Band& band : row_bands) {
      const std::size_t width = (band.second - band.first) * g.ow;
      im2col(input.values().data() + i * g.c * g.h * g.w, g, band, cols.data());
      y.middleCols(band.first * g.ow, width).noalias() = weights * ConstMatrixMap(cols.data(), patch, width);
    }
    y.colwise() += b;
  }
  Tensor result(Shape{g.n, g.k, g.oh, g.ow}, std::move(out));

  if (tape.needs_grad({&input, &kernel, &bias})) {
    tape.record({input, kernel, bias}, result,
                [input = Tensor(input), kernel = Tensor(kernel), bias = Tensor(bias), result, g]() mutable {
      const std::size_t patch = g.patch();
      const std::size_t pixels = g.out_pixels();
      const auto grad_out = result.grad();
      const ConstMatrixMap weights(kernel.values().data(), g.k, patch);
      const std::vector<Band> row_bands = bands(g);
      const std::size_t max_width = (row_bands[0].second - row_bands[0].first) * g.ow;
      std::vector<double> cols(patch * max_width);
      std::vector<double> dcols(patch * max_width);
      for (std::size_t i = 0; i < g.n; ++i) {
        const ConstMatrixMap dy(grad_out.data() + i * g.k * pixels, g.k, pixels);
        if (bias.requires_grad()) {
          // Fixed summation order: Eigen's vectorised reductions peel by
          // buffer alignment, which varies between runs.
          const auto db = bias.mutable_grad();
          for (std::size_t k = 0; k < g.k; ++k) {
            const double* row = grad_out.data() + (i * g.k + k) * pixels;
            double sum = 0.0;
            for (std::size_t p = 0; p < pixels; ++p) sum += row[p];
            db[k] += sum;
          }
        }
        for (const Band& band : row_bands) {
          const std::size_t width = (band.second - band.first) * g.ow;
          const auto dy_band = dy.middleCols(band.first * g.ow, width);
          if (kernel.requires_grad()) {
            im2col(input.values().data() + i * g.c * g.h * g.w, g, band, cols.data());
            MatrixMap dw(kernel.mutable_grad().data(), g.k, patch);
            dw.noalias() += dy_band * ConstMatrixMap(cols.data(), patch, width).transpose();
          }
          if (input.requires_grad()) {
            MatrixMap dc(dcols.data(), patch, width);
            dc.noalias() = weights.transpose() * dy_band;
            col2im_add(dcols.data(), g, band, input.mutable_grad().data() + i * g.c * g.h * g.w);
          }
        }
      }
    });
  }
  return result;
}

}  // namespace fpu::ndgrad
