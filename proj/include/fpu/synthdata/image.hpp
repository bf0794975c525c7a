#pragma once

#include <cstddef>
#include <vector>

namespace fpu::synthdata {

// Row-major single-channel image of doubles. Masks use the same type with
// values restricted to {0, 1}.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}

  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const Image&) const = default;
};

inline constexpr double kBackgroundValue = 1.0;

}  // namespace fpu::synthdata
