#include "fpu/cli/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "fpu/cli/trainer.hpp"
#include "fpu/error.hpp"
#include "fpu/metrics/psnr.hpp"
#include "fpu/metrics/segmentation.hpp"

namespace fpu::cli {

namespace {

constexpr std::size_t kEvalBatch = 8;

bool wants(const std::vector<std::string>& metrics, const char* name) {
  return std::find(metrics.begin(), metrics.end(), name) != metrics.end();
}

std::span<const double> plane(const ndgrad::Tensor& t, std::size_t n) {
  const std::size_t size = t.dim(2) * t.dim(3);
  return t.values().subspan(n * t.dim(1) * size, size);
}

// Runs `fn(first, count, output)` over consecutive batches of samples.
template <typename F>
void for_each_batch(const std::vector<IndexedSample>& samples, F&& fn) {
  for (std::size_t start = 0; start < samples.size(); start += kEvalBatch) {
    const std::size_t end = std::min(samples.size(), start + kEvalBatch);
    std::vector<const synthdata::Image*> inputs;
    for (std::size_t k = start; k < end; ++k) inputs.push_back(&samples[k].sample.degraded);
    fn(start, end - start, stack_images(inputs));
  }
}

synthdata::Image to_image(std::span<const double> values, std::size_t h, std::size_t w) {
  synthdata::Image img(h, w);
  std::copy(values.begin(), values.end(), img.pixels.begin());
  return img;
}

}  // namespace

std::vector<IndexedSample> load_indexed(const synthdata::DatasetManifest& manifest, synthdata::Split split) {
  std::vector<IndexedSample> out;
  for (const auto& e : manifest.entries) {
    if (e.split == split) out.push_back({e.index, synthdata::load_entry(manifest, e)});
  }
  return out;
}

metrics::MetricsReport evaluate_model(const models::Model& model, const std::vector<IndexedSample>& samples,
                                      const EvaluationSection& options) {
  const bool segmentation = model.config().task == models::Task::kSegmentation;
  std::vector<std::string> wanted = options.metrics;
  if (wanted.empty()) {
    wanted = segmentation ? std::vector<std::string>{"dice", "jaccard", "err", "hc", "mc"}
                          : std::vector<std::string>{"psnr"};
  }
  metrics::MetricsReport report;
  for_each_batch(samples, [&](std::size_t first, std::size_t count, const ndgrad::Tensor& x) {
    const models::DualHeadOutput out = model.predict(x);
    const ndgrad::Tensor pred = segmentation ? models::foreground_probability(out.prediction) : out.prediction;
    for (std::size_t n = 0; n < count; ++n) {
      const synthdata::Sample& s = samples[first + n].sample;
      metrics::ImageMetrics m;
      m.index = samples[first + n].index;
      if (segmentation) {
        const std::vector<double> mask = metrics::binarize(plane(pred, n), options.threshold);
        if (wants(wanted, "dice")) m.dice = metrics::dice(mask, s.mask.pixels);
        if (wants(wanted, "jaccard")) m.jaccard = metrics::jaccard(mask, s.mask.pixels);
        if (wants(wanted, "err")) {
          m.err = metrics::patch_err(mask, s.mask.pixels, s.mask.height, s.mask.width, options.patch);
        }
        const bool has_foreground = std::any_of(s.mask.pixels.begin(), s.mask.pixels.end(),
                                                [](double v) { return v == 1.0; });
        if (has_foreground && (wants(wanted, "hc") || wants(wanted, "mc"))) {
          const metrics::HitMistake hm = metrics::hit_mistake(mask, s.mask.pixels);
          if (wants(wanted, "hc")) m.hc = hm.hc;
          if (wants(wanted, "mc")) m.mc = hm.mc;
        }
      } else if (wants(wanted, "psnr")) {
        std::vector<double> clamped(plane(pred, n).begin(), plane(pred, n).end());
        for (double& v : clamped) v = std::clamp(v, 0.0, 1.0);
        m.psnr = metrics::psnr(clamped, s.clean.pixels);
      }
      report.per_image.push_back(std::move(m));
    }
  });
  report.mean = metrics::summarize(report.per_image);
  return report;
}

const char* to_string(UncertaintyMode mode) { return mode == UncertaintyMode::kData ? "data" : "model"; }

UncertaintyMode parse_uncertainty_mode(const std::string& text) {
  if (text == "data") return UncertaintyMode::kData;
  if (text == "model" || text == "mc") return UncertaintyMode::kModel;
  throw InvalidArgument("unknown uncertainty mode '" + text + "' (expected data or model)");
}

UncertaintyAnalysis analyze_uncertainty(const models::Model& model, const std::vector<IndexedSample>& samples,
                                        UncertaintyMode mode, std::size_t passes, double threshold,
                                        std::uint64_t seed) {
  if (mode == UncertaintyMode::kData && model.config().head_mode != models::HeadMode::kDual) {
    throw InvalidState("data uncertainty needs a dual-head checkpoint; use model (MC dropout) mode instead");
  }
  const bool segmentation = model.config().task == models::Task::kSegmentation;
  const std::size_t h = model.config().height, w = model.config().width;
  UncertaintyAnalysis analysis;
  analysis.mode = mode;
  metrics::UncertaintyAccumulator pooled;

  auto record = [&](const IndexedSample& item, std::span<const double> variance, std::span<const double> pred) {
    const synthdata::Sample& s = item.sample;
    std::vector<double> pred_mask = segmentation ? metrics::binarize(pred, threshold) : s.mask.pixels;
    ImageUncertainty u{item.index, to_image(variance, h, w), metrics::uncertainty_stats(variance, s.mask.pixels, pred_mask)};
    pooled.add(variance, s.mask.pixels, pred_mask);
    analysis.per_image.push_back(std::move(u));
  };

  if (mode == UncertaintyMode::kData) {
    for_each_batch(samples, [&](std::size_t first, std::size_t count, const ndgrad::Tensor& x) {
      const models::DualHeadOutput out = model.predict(x);
      const ndgrad::Tensor pred = segmentation ? models::foreground_probability(out.prediction) : out.prediction;
      for (std::size_t n = 0; n < count; ++n) {
        std::vector<double> variance(plane(*out.log_variance, n).begin(), plane(*out.log_variance, n).end());
        for (double& v : variance) v = std::exp(v);
        record(samples[first + n], variance, plane(pred, n));
      }
    });
  } else {
    for (const IndexedSample& item : samples) {
      const ndgrad::Tensor x = stack_images({&item.sample.degraded});
      const models::McDropoutResult mc =
          models::forward_mc_dropout(model, x, passes, ndgrad::Rng::substream(seed, item.index));
      // Channel 1 of the mean softmax is the foreground probability.
      const auto mean = segmentation ? mc.mean_prediction.values().subspan(h * w, h * w) : mc.mean_prediction.values();
      record(item, mc.model_uncertainty.values(), mean);
    }
  }
  analysis.aggregate = pooled.stats();
  return analysis;
}

}  // namespace fpu::cli
