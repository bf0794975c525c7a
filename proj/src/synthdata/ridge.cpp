#include "fpu/synthdata/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fpu/error.hpp"

namespace fpu::synthdata {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t field_size(const RidgeParams& p) { return std::max(p.height, p.width); }

}  // namespace

double OrientationField::distance(double y, double x, std::size_t size) const {
  double d = x * std::cos(base_angle) + y * std::sin(base_angle);
  const double n = static_cast<double>(size);
  for (const auto& h : harmonics) d += h.amplitude * std::sin(kTwoPi * (h.fy * y + h.fx * x) / n + h.phase);
  return d;
}

double OrientationField::angle(double y, double x, std::size_t size) const {
  double gy = std::sin(base_angle);
  double gx = std::cos(base_angle);
  const double n = static_cast<double>(size);
  for (const auto& h : harmonics) {
    const double c = h.amplitude * std::cos(kTwoPi * (h.fy * y + h.fx * x) / n + h.phase) * kTwoPi / n;
    gy += c * h.fy;
    gx += c * h.fx;
  }
  return std::atan2(gy, gx);
}

OrientationField random_orientation_field(ndgrad::Rng& rng, std::size_t harmonics, double max_amplitude) {
  OrientationField field;
  field.base_angle = rng.uniform(0.0, std::numbers::pi);
  for (std::size_t k = 0; k < harmonics; ++k) {
    Harmonic h;
    h.amplitude = rng.uniform() * max_amplitude / static_cast<double>(harmonics);
    h.fy = rng.uniform(-1.5, 1.5);
    h.fx = rng.uniform(-1.5, 1.5);
    h.phase = rng.uniform(0.0, kTwoPi);
    field.harmonics.push_back(h);
  }
  return field;
}

bool Ellipse::contains(double y, double x) const {
  const double dy = y - center_y;
  const double dx = x - center_x;
  const double u = dy * std::cos(rotation) + dx * std::sin(rotation);
  const double v = -dy * std::sin(rotation) + dx * std::cos(rotation);
  return (u * u) / (semi_axis_y * semi_axis_y) + (v * v) / (semi_axis_x * semi_axis_x) <= 1.0;
}

Image rasterize_mask(std::size_t height, std::size_t width, const Ellipse& ellipse) {
  if (!(ellipse.semi_axis_y > 0.0) || !(ellipse.semi_axis_x > 0.0)) {
    throw InvalidArgument("degenerate mask ellipse: semi-axes must be positive");
  }
  Image mask(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      mask.at(r, c) = ellipse.contains(r + 0.5, c + 0.5) ? 1.0 : 0.0;
    }
  }
  return mask;
}

void RidgeParams::validate() const {
  if (height == 0 || width == 0) throw InvalidArgument("ridge image size must be positive");
  if (!(ridge_frequency > 0.0 && ridge_frequency < 0.5)) {
    throw InvalidArgument("ridge_frequency must lie in (0, 0.5), got " + std::to_string(ridge_frequency));
  }
  const Image mask = rasterize_mask(height, width, mask_shape);
  double covered = 0.0;
  for (double m : mask.pixels) covered += m;
  const double fraction = covered / static_cast<double>(mask.size());
  if (fraction < 0.2 || fraction > 0.8) {
    throw InvalidArgument("mask covers " + std::to_string(fraction) + " of the image; expected 0.2..0.8");
  }
}

double ridge_value(const RidgeParams& params, std::size_t r, std::size_t c) {
  const double y = r + 0.5 - params.mask_shape.center_y;
  const double x = c + 0.5 - params.mask_shape.center_x;
  const double d = params.orientation.distance(y, x, field_size(params));
  return 0.5 * (1.0 + std::cos(kTwoPi * params.ridge_frequency * d));
}

std::pair<Image, Image> generate_clean(const RidgeParams& params) {
  params.validate();
  Image mask = rasterize_mask(params.height, params.width, params.mask_shape);
  Image clean(params.height, params.width, kBackgroundValue);
  for (std::size_t r = 0; r < params.height; ++r) {
    for (std::size_t c = 0; c < params.width; ++c) {
      if (mask.at(r, c) == 1.0) clean.at(r, c) = ridge_value(params, r, c);
    }
  }
  return {std::move(clean), std::move(mask)};
}

}  // namespace fpu::synthdata
