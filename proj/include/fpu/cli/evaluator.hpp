#pragma once

#include <cstddef>
#include <vector>

#include "fpu/cli/config.hpp"
#include "fpu/metrics/report.hpp"
#include "fpu/metrics/uncertainty.hpp"
#include "fpu/models/model.hpp"
#include "fpu/synthdata/dataset.hpp"

namespace fpu::cli {

struct IndexedSample {
  std::size_t index = 0;
  synthdata::Sample sample;
};

std::vector<IndexedSample> load_indexed(const synthdata::DatasetManifest& manifest, synthdata::Split split);

// Segmentation: foreground probability binarised at the threshold, then
// dice/jaccard/err/hc/mc. Reconstruction: PSNR of the prediction clamped to
// [0, 1] against the clean image. Only the requested metrics are filled.
metrics::MetricsReport evaluate_model(const models::Model& model, const std::vector<IndexedSample>& samples,
                                      const EvaluationSection& options);

enum class UncertaintyMode { kData, kModel };
const char* to_string(UncertaintyMode mode);
UncertaintyMode parse_uncertainty_mode(const std::string& text);

struct ImageUncertainty {
  std::size_t index = 0;
  synthdata::Image variance;
  metrics::UncertaintyStats stats;
};

struct UncertaintyAnalysis {
  UncertaintyMode mode = UncertaintyMode::kData;
  std::vector<ImageUncertainty> per_image;
  metrics::UncertaintyStats aggregate;  // pooled over all evaluated pixels
};

// kData needs a dual-head model (variance = exp(log variance)); kModel runs
// MC dropout with `passes` passes. For reconstruction models every pixel
// counts as correctly classified, so only the foreground/background split is
// informative.
UncertaintyAnalysis analyze_uncertainty(const models::Model& model, const std::vector<IndexedSample>& samples,
                                        UncertaintyMode mode, std::size_t passes, double threshold,
                                        std::uint64_t seed);

}  // namespace fpu::cli
