#include "fpu/cli/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fpu/error.hpp"
#include "fpu/synthdata/pgm.hpp"

namespace fpu::cli {

namespace {

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<Bar>& bars) {
  constexpr double kWidth = 480, kHeight = 320, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  double top = 0.0;
  for (const Bar& b : bars) {
    if (!std::isfinite(b.value) || b.value < 0.0) throw InvalidArgument("bar values must be finite and non-negative");
    top = std::max(top, b.value);
  }
  if (top == 0.0) top = 1.0;
  top *= 1.1;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = top * tick / 4.0;
    const double y = kTop + plot_h - plot_h * tick / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << number(v) << "</text>\n";
  }
  const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = plot_h * bars[i].value / top;
    const double x = kLeft + slot * i + slot * 0.2;
    svg << "<rect x=\"" << x << "\" y=\"" << kTop + plot_h - h << "\" width=\"" << slot * 0.6 << "\" height=\"" << h
        << "\" fill=\"#4878a8\"/>\n"
        << "<text x=\"" << x + slot * 0.3 << "\" y=\"" << kTop + plot_h - h - 4 << "\" text-anchor=\"middle\">"
        << number(bars[i].value) << "</text>\n"
        << "<text x=\"" << x + slot * 0.3 << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
        << escape_xml(bars[i].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

HeatMapRange write_heat_map(const synthdata::Image& values, const std::filesystem::path& path) {
  if (values.pixels.empty()) throw InvalidArgument("cannot write an empty heat map");
  const auto [lo, hi] = std::minmax_element(values.pixels.begin(), values.pixels.end());
  const HeatMapRange range{*lo, *hi};
  synthdata::Image scaled(values.height, values.width, 0.0);
  if (range.max > range.min) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      scaled.pixels[i] = std::clamp((values.pixels[i] - range.min) / (range.max - range.min), 0.0, 1.0);
    }
  }
  synthdata::write_pgm(path, synthdata::to_pgm16(scaled));
  return range;
}

}  // namespace fpu::cli
