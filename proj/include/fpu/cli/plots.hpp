#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fpu/synthdata/image.hpp"

namespace fpu::cli {

struct Bar {
  std::string label;
  double value = 0.0;
};

// Standalone SVG bar chart with a zero-based y axis.
std::string svg_bar_chart(const std::string& title, const std::vector<Bar>& bars);

struct HeatMapRange {
  double min = 0.0;
  double max = 0.0;
};

// Writes a 16-bit PGM where min maps to 0 and max to 65535. A constant map is
// written as all zeros. Returns the range used.
HeatMapRange write_heat_map(const synthdata::Image& values, const std::filesystem::path& path);

}  // namespace fpu::cli
