#pragma once

#include <span>
#include <string>

namespace fpu::metrics {

// Identical images have no finite PSNR; that case is flagged rather than
// encoded as a large number.
struct Psnr {
  bool infinite = false;
  double db = 0.0;

  static Psnr infinity() { return {true, 0.0}; }
  bool operator==(const Psnr&) const = default;
};

// 10 log10(max_val^2 / MSE).
Psnr psnr(std::span<const double> a, std::span<const double> b, double max_val = 1.0);

std::string to_string(const Psnr& value);

}  // namespace fpu::metrics
