#include "fpu/cli/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fpu/error.hpp"
#include "fpu/losses/losses.hpp"
#include "fpu/ndgrad/adam.hpp"

namespace fpu::cli {

namespace {

using ndgrad::Rng;
using ndgrad::Tensor;

enum Stream : std::uint64_t { kShuffle = 1, kDropout = 2, kLossNoise = 3 };

struct Range {
  double lo = INFINITY, hi = -INFINITY, sum = 0.0;
  std::size_t n = 0;

  void add(std::span<const double> values) {
    for (double v : values) lo = std::min(lo, v), hi = std::max(hi, v), sum += v, ++n;
  }
  std::string describe(const char* name) const {
    std::ostringstream out;
    out << name << " min " << lo << " max " << hi << " mean " << (n ? sum / n : 0.0);
    return out.str();
  }
};

losses::LossValue compute_loss(ndgrad::Tape& tape, const models::DualHeadOutput& out, const Tensor& target,
                               const TrainingSection& options, Rng& noise) {
  switch (options.loss) {
    case LossKind::kMse:
      return losses::mse_loss(tape, out.prediction, target);
    case LossKind::kCe:
      return losses::cross_entropy_loss(tape, out.prediction, target);
    case LossKind::kHetReg:
      return losses::heteroscedastic_regression_loss(tape, out.prediction, *out.log_variance, target);
    case LossKind::kHetCls:
      return losses::heteroscedastic_classification_loss(tape, out.prediction, *out.log_variance, target,
                                                         options.samples, noise);
  }
  throw InvalidState("unhandled loss kind");
}

void check_pairing(const models::Model& model, LossKind loss) {
  const bool het = loss == LossKind::kHetReg || loss == LossKind::kHetCls;
  const bool dual = model.config().head_mode == models::HeadMode::kDual;
  const bool seg_loss = loss == LossKind::kCe || loss == LossKind::kHetCls;
  const bool seg = model.config().task == models::Task::kSegmentation;
  if (het != dual || seg_loss != seg) {
    throw InvalidArgument("loss " + to_string(loss) + " cannot train a " + models::to_string(model.config().task) +
                          " model with head_mode " + models::to_string(model.config().head_mode));
  }
}

}  // namespace

Tensor stack_images(const std::vector<const synthdata::Image*>& images) {
  if (images.empty()) throw InvalidArgument("cannot stack an empty image list");
  const std::size_t h = images[0]->height, w = images[0]->width;
  std::vector<double> values;
  values.reserve(images.size() * h * w);
  for (const auto* img : images) {
    if (img->height != h || img->width != w) throw InvalidArgument("images in a batch must share one size");
    values.insert(values.end(), img->pixels.begin(), img->pixels.end());
  }
  return Tensor({images.size(), 1, h, w}, std::move(values));
}

std::string divergence_warning(const std::vector<double>& curve) {
  if (curve.size() < 4) return "";
  const std::size_t start = curve.size() - std::max<std::size_t>(2, curve.size() / 4);
  const double n = static_cast<double>(curve.size() - start);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = start; i < curve.size(); ++i) mx += static_cast<double>(i), my += curve[i];
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = start; i < curve.size(); ++i) {
    sxy += (static_cast<double>(i) - mx) * (curve[i] - my);
    sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
  }
  const double slope = sxy / sxx;
  if (slope <= 0.0) return "";
  std::ostringstream out;
  out << "training loss rose over the final " << curve.size() - start << " epochs (slope " << slope
      << " per epoch)";
  return out.str();
}

TrainingResult train_model(models::Model& model, const std::vector<synthdata::Sample>& samples,
                           const TrainingSection& options, const EpochCallback& on_epoch) {
  check_pairing(model, options.loss);
  if (options.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  TrainingResult result;
  if (options.epochs == 0) return result;
  if (samples.empty()) throw InvalidArgument("training set is empty");

  const bool segmentation = model.config().task == models::Task::kSegmentation;
  std::vector<Tensor> params = model.parameters();
  ndgrad::AdamOptions adam;
  adam.learning_rate = options.learning_rate;
  ndgrad::OptimizerState state = ndgrad::OptimizerState::create(params, adam);
  Rng shuffle = Rng::substream(options.seed, kShuffle);
  Rng dropout = Rng::substream(options.seed, kDropout);
  Rng noise = Rng::substream(options.seed, kLossNoise);

  std::vector<std::size_t> order(samples.size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);
    double epoch_sum = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += options.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<const synthdata::Image*> inputs, targets;
      for (std::size_t k = start; k < end; ++k) {
        const synthdata::Sample& s = samples[order[k]];
        inputs.push_back(&s.degraded);
        targets.push_back(segmentation ? &s.mask : &s.clean);
      }
      const Tensor x = stack_images(inputs);
      const Tensor y = stack_images(targets);

      for (auto& p : params) p.clear_grad();
      ndgrad::Tape tape;
      const models::DualHeadOutput out = model.forward(tape, x, true, dropout);
      const losses::LossValue loss = compute_loss(tape, out, y, options, noise);
      const double value = loss.scalar.item();
      if (!std::isfinite(value)) {
        Range in, pred, logvar;
        in.add(x.values());
        pred.add(out.prediction.values());
        if (out.log_variance) logvar.add(out.log_variance->values());
        std::ostringstream msg;
        msg << "non-finite loss " << value << " at epoch " << epoch + 1 << ", batch " << batch + 1 << " (samples";
        for (std::size_t k = start; k < end; ++k) msg << " " << order[k];
        msg << "); " << in.describe("input") << "; " << pred.describe("prediction");
        if (out.log_variance) msg << "; " << logvar.describe("log-variance");
        throw NumericalError(msg.str());
      }
      tape.backward(loss.scalar);
      ndgrad::adam_step(params, state);
      epoch_sum += value * static_cast<double>(end - start);
    }
    const double mean = epoch_sum / static_cast<double>(samples.size());
    result.loss_curve.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  if (auto warning = divergence_warning(result.loss_curve); !warning.empty()) result.warnings.push_back(warning);
  return result;
}

}  // namespace fpu::cli
