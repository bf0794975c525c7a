#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fpu::metrics {

// Masks are row-major spans of 0.0 / 1.0 values; any other value is rejected.

// Foreground iff prob >= threshold.
std::vector<double> binarize(std::span<const double> prob, double threshold = 0.5);

// 2|P and G| / (|P| + |G|); 1.0 when both masks are empty.
double dice(std::span<const double> pred, std::span<const double> gt);
// |P and G| / |P or G|; 1.0 when both masks are empty.
double jaccard(std::span<const double> pred, std::span<const double> gt);

// Fraction of patch x patch tiles whose labels differ, where a tile is
// foreground iff strictly more than half of its pixels are (ties go to
// background). height and width must be multiples of patch.
double patch_err(std::span<const double> pred, std::span<const double> gt, std::size_t height, std::size_t width,
                 std::size_t patch = 16);

struct HitMistake {
  double hc = 0.0;  // |P and G| / |G|
  double mc = 0.0;  // |P minus G| / |G|, may exceed 1
};
// Throws InvalidArgument when G is empty.
HitMistake hit_mistake(std::span<const double> pred, std::span<const double> gt);

}  // namespace fpu::metrics
