#include "fpu/metrics/psnr.hpp"

#include <cmath>
#include <cstdio>

#include "fpu/error.hpp"

namespace fpu::metrics {

Psnr psnr(std::span<const double> a, std::span<const double> b, double max_val) {
  if (a.size() != b.size() || a.empty()) throw InvalidArgument("psnr: images must be non-empty and equally sized");
  if (!(max_val > 0.0)) throw InvalidArgument("psnr: max_val must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  if (sum == 0.0) return Psnr::infinity();
  const double mse = sum / static_cast<double>(a.size());
  return {false, 10.0 * std::log10(max_val * max_val / mse)};
}

std::string to_string(const Psnr& value) {
  if (value.infinite) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value.db);
  return buf;
}

}  // namespace fpu::metrics
