#include "fpu/synthdata/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fpu/error.hpp"

namespace fpu::synthdata {

namespace {

// Eroded ridge pixels move this fraction of the way towards white.
constexpr double kErosionLift = 0.85;
constexpr std::size_t kTextureGratings = 3;

enum Stage : std::uint64_t { kErosion = 1, kNoise, kOcclusion, kTexture };

void erode(Image& image, const Image& mask, double rate, ndgrad::Rng rng) {
  for (std::size_t r0 = 0; r0 < image.height; r0 += kDrynessCell) {
    for (std::size_t c0 = 0; c0 < image.width; c0 += kDrynessCell) {
      if (rng.uniform() >= rate) continue;
      for (std::size_t r = r0; r < std::min(r0 + kDrynessCell, image.height); ++r) {
        for (std::size_t c = c0; c < std::min(c0 + kDrynessCell, image.width); ++c) {
          if (mask.at(r, c) == 1.0) image.at(r, c) += (1.0 - image.at(r, c)) * kErosionLift;
        }
      }
    }
  }
}

void add_noise(Image& image, double stddev, ndgrad::Rng rng) {
  for (double& v : image.pixels) v += stddev * rng.normal();
}

void occlude(Image& image, const DegradationParams& p, ndgrad::Rng rng) {
  for (std::size_t k = 0; k < p.occlusion_count; ++k) {
    const double cy = rng.uniform(0.0, static_cast<double>(image.height));
    const double cx = rng.uniform(0.0, static_cast<double>(image.width));
    const double radius = rng.uniform(p.occlusion_radius_min, p.occlusion_radius_max);
    for (std::size_t r = 0; r < image.height; ++r) {
      for (std::size_t c = 0; c < image.width; ++c) {
        const double dy = r + 0.5 - cy;
        const double dx = c + 0.5 - cx;
        if (dy * dy + dx * dx <= radius * radius) image.at(r, c) = kBackgroundValue;
      }
    }
  }
}

void add_texture(Image& image, const Image& mask, double gain, ndgrad::Rng rng) {
  struct Grating {
    double ky, kx, phase;
  };
  std::vector<Grating> gratings;
  for (std::size_t k = 0; k < kTextureGratings; ++k) {
    const double freq = rng.uniform(0.02, 0.15);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    gratings.push_back({freq * std::sin(angle), freq * std::cos(angle), rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      if (mask.at(r, c) == 1.0) continue;
      double t = 0.0;
      for (const auto& g : gratings) t += 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * (g.ky * r + g.kx * c) + g.phase));
      image.at(r, c) -= gain * t / kTextureGratings;
    }
  }
}

}  // namespace

void DegradationParams::validate() const {
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0)) throw InvalidArgument(std::string(name) + " must be non-negative");
  };
  non_negative(gaussian_noise_std, "gaussian_noise_std");
  non_negative(blur_sigma, "blur_sigma");
  non_negative(background_texture_gain, "background_texture_gain");
  non_negative(occlusion_radius_min, "occlusion_radius_min");
  if (!(occlusion_radius_max >= occlusion_radius_min)) {
    throw InvalidArgument("occlusion_radius_max must be >= occlusion_radius_min");
  }
  if (!(dryness_gap_rate >= 0.0 && dryness_gap_rate <= 1.0)) {
    throw InvalidArgument("dryness_gap_rate must lie in [0, 1]");
  }
}

bool DegradationParams::is_identity() const {
  return gaussian_noise_std == 0.0 && occlusion_count == 0 && blur_sigma == 0.0 && dryness_gap_rate == 0.0 &&
         background_texture_gain == 0.0;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& w : kernel) w /= total;

  const auto h = static_cast<std::ptrdiff_t>(image.height);
  const auto w = static_cast<std::ptrdiff_t>(image.width);
  auto clamp_index = [](std::ptrdiff_t i, std::ptrdiff_t n) { return std::clamp<std::ptrdiff_t>(i, 0, n - 1); };
  Image tmp(image.height, image.width);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) acc += kernel[k + radius] * image.at(r, clamp_index(c + k, w));
      tmp.at(r, c) = acc;
    }
  }
  Image out(image.height, image.width);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp.at(clamp_index(r + k, h), c);
      out.at(r, c) = acc;
    }
  }
  return out;
}

Image degrade(const Image& clean, const Image& mask, const DegradationParams& params, const ndgrad::Rng& rng) {
  params.validate();
  if (clean.height != mask.height || clean.width != mask.width) {
    throw InvalidArgument("degrade: image and mask sizes differ");
  }
  for (double v : clean.pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("degrade: clean image must lie in [0, 1]");
  }
  Image out = clean;
  if (params.dryness_gap_rate > 0.0) erode(out, mask, params.dryness_gap_rate, rng.split(kErosion));
  if (params.blur_sigma > 0.0) out = gaussian_blur(out, params.blur_sigma);
  if (params.gaussian_noise_std > 0.0) add_noise(out, params.gaussian_noise_std, rng.split(kNoise));
  if (params.occlusion_count > 0) occlude(out, params, rng.split(kOcclusion));
  if (params.background_texture_gain > 0.0) add_texture(out, mask, params.background_texture_gain, rng.split(kTexture));
  for (double& v : out.pixels) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace fpu::synthdata
