#include "fpu/metrics/segmentation.hpp"

#include <string>

#include "fpu/error.hpp"

namespace fpu::metrics {

namespace {

struct Counts {
  std::size_t pred = 0;
  std::size_t gt = 0;
  std::size_t both = 0;
};

void check_pair(std::span<const double> pred, std::span<const double> gt, const char* what) {
  if (pred.size() != gt.size()) {
    throw InvalidArgument(std::string(what) + ": mask sizes differ (" + std::to_string(pred.size()) + " vs " +
                          std::to_string(gt.size()) + ")");
  }
  for (std::span<const double> m : {pred, gt}) {
    for (double v : m) {
      if (v != 0.0 && v != 1.0) throw InvalidArgument(std::string(what) + ": masks must be binary");
    }
  }
}

Counts count(std::span<const double> pred, std::span<const double> gt, const char* what) {
  check_pair(pred, gt, what);
  Counts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == 1.0;
    const bool g = gt[i] == 1.0;
    c.pred += p;
    c.gt += g;
    c.both += p && g;
  }
  return c;
}

}  // namespace

std::vector<double> binarize(std::span<const double> prob, double threshold) {
  std::vector<double> mask(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) mask[i] = prob[i] >= threshold ? 1.0 : 0.0;
  return mask;
}

double dice(std::span<const double> pred, std::span<const double> gt) {
  const Counts c = count(pred, gt, "dice");
  if (c.pred + c.gt == 0) return 1.0;
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.pred + c.gt);
}

double jaccard(std::span<const double> pred, std::span<const double> gt) {
  const Counts c = count(pred, gt, "jaccard");
  const std::size_t uni = c.pred + c.gt - c.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.both) / static_cast<double>(uni);
}

double patch_err(std::span<const double> pred, std::span<const double> gt, std::size_t height, std::size_t width,
                 std::size_t patch) {
  check_pair(pred, gt, "patch_err");
  if (patch == 0 || height == 0 || width == 0 || height % patch != 0 || width % patch != 0) {
    throw InvalidArgument("patch_err: image " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not divisible into " + std::to_string(patch) + "-pixel patches");
  }
  if (height * width != pred.size()) throw InvalidArgument("patch_err: mask size does not match height x width");
  const std::size_t rows = height / patch;
  const std::size_t cols = width / patch;
  std::vector<std::size_t> pred_fg(rows * cols, 0), gt_fg(rows * cols, 0);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t tile = (r / patch) * cols + c / patch;
      pred_fg[tile] += pred[r * width + c] == 1.0;
      gt_fg[tile] += gt[r * width + c] == 1.0;
    }
  }
  const std::size_t area = patch * patch;
  std::size_t mismatched = 0;
  for (std::size_t t = 0; t < rows * cols; ++t) {
    mismatched += (2 * pred_fg[t] > area) != (2 * gt_fg[t] > area);
  }
  return static_cast<double>(mismatched) / static_cast<double>(rows * cols);
}

HitMistake hit_mistake(std::span<const double> pred, std::span<const double> gt) {
  const Counts c = count(pred, gt, "hit_mistake");
  if (c.gt == 0) throw InvalidArgument("hit_mistake: ground truth has no foreground pixels");
  const double g = static_cast<double>(c.gt);
  return {static_cast<double>(c.both) / g, static_cast<double>(c.pred - c.both) / g};
}

}  // namespace fpu::metrics
