#pragma once

#include <cstddef>
#include <cstdint>

#include "fpu/ndgrad/rng.hpp"
#include "fpu/synthdata/image.hpp"

namespace fpu::synthdata {

struct DegradationParams {
  double gaussian_noise_std = 0.0;
  std::size_t occlusion_count = 0;
  double occlusion_radius_min = 2.0;
  double occlusion_radius_max = 6.0;
  double blur_sigma = 0.0;
  double dryness_gap_rate = 0.0;  // probability that a 4x4 cell of ridge is eroded
  double background_texture_gain = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const;
};

inline constexpr std::size_t kDrynessCell = 4;

// Applies, in order: ridge erosion inside the mask, Gaussian blur, additive
// Gaussian noise, occlusion disks set to the background value, structured
// texture outside the mask, and a final clamp to [0, 1]. Stages with zero
// magnitude are skipped. Each stage draws from its own child stream of `rng`,
// so enabling one stage never changes the randomness of another.
Image degrade(const Image& clean, const Image& mask, const DegradationParams& params, const ndgrad::Rng& rng);

Image gaussian_blur(const Image& image, double sigma);

}  // namespace fpu::synthdata
