#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "fpu/ndgrad/rng.hpp"
#include "fpu/synthdata/image.hpp"

namespace fpu::synthdata {

// One low-frequency displacement term (pixels):
//   amplitude * sin(2 pi (fy * y + fx * x) / size + phase)
// with size the larger image side.
struct Harmonic {
  double amplitude = 0.0;
  double fy = 0.0;
  double fx = 0.0;
  double phase = 0.0;
};

// Ridges follow level sets of the distance field
//   d(y, x) = x cos(base_angle) + y sin(base_angle) + sum of harmonics,
// with (y, x) relative to the mask centre. The local ridge normal is the
// direction of grad d, so the harmonics bend the ridges smoothly.
struct OrientationField {
  double base_angle = 0.0;
  std::vector<Harmonic> harmonics;

  double distance(double y, double x, std::size_t size) const;
  // Local ridge-normal angle, atan2 of grad d.
  double angle(double y, double x, std::size_t size) const;
};

// Harmonic frequencies lie in [-1.5, 1.5] cycles per image; amplitudes sum to
// at most max_amplitude pixels.
OrientationField random_orientation_field(ndgrad::Rng& rng, std::size_t harmonics, double max_amplitude);

// Ellipse in pixel coordinates: centre, semi-axes and rotation (radians) of
// the first axis from the image row direction.
struct Ellipse {
  double center_y = 0.0;
  double center_x = 0.0;
  double semi_axis_y = 0.0;
  double semi_axis_x = 0.0;
  double rotation = 0.0;

  bool contains(double y, double x) const;
};

struct RidgeParams {
  std::size_t height = 64;
  std::size_t width = 64;
  double ridge_frequency = 0.1;  // cycles per pixel
  OrientationField orientation;
  Ellipse mask_shape;
  std::uint64_t seed = 0;

  // Throws InvalidArgument unless 0 < ridge_frequency < 0.5, both semi-axes
  // are positive and the rasterised mask covers 20%..80% of the image.
  void validate() const;
};

// Pixel (r, c) is foreground iff its centre (r + 0.5, c + 0.5) is inside the ellipse.
Image rasterize_mask(std::size_t height, std::size_t width, const Ellipse& ellipse);

// Unmasked ridge intensity 0.5 * (1 + cos(2 pi f d)) at pixel centre (r, c).
double ridge_value(const RidgeParams& params, std::size_t r, std::size_t c);

// Dark ridges on a white background: ridge_value inside the mask, 1.0 outside.
// Returns (clean, mask).
std::pair<Image, Image> generate_clean(const RidgeParams& params);

}  // namespace fpu::synthdata
