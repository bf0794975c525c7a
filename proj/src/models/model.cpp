#include "fpu/models/model.hpp"

#include <algorithm>
#include <cmath>

#include "fpu/error.hpp"

namespace fpu::models {

std::string to_string(Task task) { return task == Task::kSegmentation ? "segmentation" : "reconstruction"; }

std::string to_string(HeadMode mode) { return mode == HeadMode::kSingle ? "single" : "dual"; }

Task parse_task(std::string_view text) {
  if (text == "segmentation") return Task::kSegmentation;
  if (text == "reconstruction") return Task::kReconstruction;
  throw InvalidArgument("unknown task '" + std::string(text) + "'");
}

HeadMode parse_head_mode(std::string_view text) {
  if (text == "single") return HeadMode::kSingle;
  if (text == "dual") return HeadMode::kDual;
  throw InvalidArgument("unknown head mode '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  if (base_channels == 0) throw InvalidArgument("base_channels must be positive");
  if (depth == 0 || depth > 8) throw InvalidArgument("depth must lie in [1, 8]");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("dropout_rate must lie in [0, 1)");
  const std::size_t factor = std::size_t{1} << depth;
  if (height == 0 || width == 0 || height % factor != 0 || width % factor != 0) {
    throw InvalidArgument("input size " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not divisible by 2^depth = " + std::to_string(factor));
  }
}

Model::Conv Model::make_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t extent,
                             bool zero_init) {
  const std::size_t fan_in = in * extent * extent;
  std::vector<double> weights(out * fan_in, 0.0);
  if (!zero_init) {
    Rng rng = Rng::substream(config_.seed, ndgrad::hash_string(name.c_str()));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& w : weights) w = stddev * rng.normal();
  }
  Conv conv{Tensor({out, in, extent, extent}, std::move(weights), true), Tensor::zeros({out}, true), extent / 2};
  params_.push_back({name + ".kernel", conv.kernel});
  params_.push_back({name + ".bias", conv.bias});
  return conv;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t base = config_.base_channels;
  std::size_t in = 1;
  for (std::size_t k = 0; k < config_.depth; ++k) {
    const std::size_t out = base << k;
    encoder_.push_back(make_conv("enc" + std::to_string(k), in, out, 3, false));
    in = out;
  }
  bottleneck_ = make_conv("bottleneck", in, base << config_.depth, 3, false);
  decoder_.resize(config_.depth);
  for (std::size_t k = config_.depth; k-- > 0;) {
    const std::size_t from_below = base << (k + 1);
    const std::size_t skip = base << k;
    decoder_[k] = make_conv("dec" + std::to_string(k), from_below + skip, skip, 3, false);
  }
  pred_hidden_ = make_conv("pred_head.hidden", base, base, 3, false);
  pred_out_ = make_conv("pred_head.out", base, config_.output_channels(), 1, false);
  if (config_.head_mode == HeadMode::kDual) {
    var_hidden_ = make_conv("var_head.hidden", base, base, 3, false);
    // Zero output layer: the variance head starts at log sigma^2 = 0 everywhere.
    var_out_ = make_conv("var_head.out", base, 1, 1, true);
  }
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

Tensor Model::apply(Tape& tape, const Conv& conv, const Tensor& x) const {
  return ndgrad::conv2d(tape, x, conv.kernel, conv.bias, conv.padding, 1);
}

Tensor Model::block(Tape& tape, const Conv& conv, const Tensor& x, bool train_mode, Rng& rng) const {
  Tensor h = ndgrad::relu(tape, apply(tape, conv, x));
  return ndgrad::dropout(tape, h, config_.dropout_rate, train_mode, rng);
}

DualHeadOutput Model::forward(Tape& tape, const Tensor& batch, bool train_mode, Rng& rng) const {
  if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != config_.height || batch.dim(3) != config_.width) {
    throw InvalidArgument("model expects input [N,1," + std::to_string(config_.height) + "," +
                          std::to_string(config_.width) + "], got " + ndgrad::shape_to_string(batch.shape()));
  }
  for (double v : batch.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("model input values must lie in [0, 1]");
  }

  std::vector<Tensor> skips;
  Tensor x = batch;
  for (const Conv& conv : encoder_) {
    x = block(tape, conv, x, train_mode, rng);
    skips.push_back(x);
    x = ndgrad::max_pool2d(tape, x, 2);
  }
  x = block(tape, bottleneck_, x, train_mode, rng);
  for (std::size_t k = config_.depth; k-- > 0;) {
    x = ndgrad::upsample_nearest(tape, x, 2);
    x = ndgrad::concat_channels(tape, x, skips[k]);
    x = block(tape, decoder_[k], x, train_mode, rng);
  }

  DualHeadOutput out;
  out.prediction = apply(tape, pred_out_, ndgrad::relu(tape, apply(tape, pred_hidden_, x)));
  if (var_hidden_) {
    Tensor s = apply(tape, *var_out_, ndgrad::relu(tape, apply(tape, *var_hidden_, x)));
    out.log_variance = ndgrad::clamp(tape, s, kLogVarianceMin, kLogVarianceMax);
  }
  return out;
}

DualHeadOutput Model::predict(const Tensor& batch) const {
  Tape tape(Tape::Mode::kInference);
  Rng unused(0);
  return forward(tape, batch, false, unused);
}

void Model::load_parameters(const std::vector<NamedParameter>& values) {
  if (values.size() != params_.size()) {
    throw InvalidArgument("expected " + std::to_string(params_.size()) + " parameter arrays, got " +
                          std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    NamedParameter& dst = params_[i];
    const NamedParameter& src = values[i];
    if (dst.name != src.name || dst.value.shape() != src.value.shape()) {
      throw InvalidArgument("parameter mismatch at index " + std::to_string(i) + ": expected " + dst.name + " " +
                            ndgrad::shape_to_string(dst.value.shape()) + ", got " + src.name + " " +
                            ndgrad::shape_to_string(src.value.shape()));
    }
    auto target = dst.value.mutable_values();
    std::copy(src.value.values().begin(), src.value.values().end(), target.begin());
  }
}

Model build_model(const ModelConfig& config) { return Model(config); }

Tensor foreground_probability(const Tensor& logits) {
  if (logits.rank() != 4 || logits.dim(1) != 2) {
    throw InvalidArgument("foreground_probability expects [N,2,H,W] logits, got " +
                          ndgrad::shape_to_string(logits.shape()));
  }
  const std::size_t n = logits.dim(0), hw = logits.dim(2) * logits.dim(3);
  const auto v = logits.values();
  std::vector<double> out(n * hw);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < hw; ++p) {
      const double margin = v[(i * 2 + 1) * hw + p] - v[(i * 2) * hw + p];
      out[i * hw + p] = margin >= 0.0 ? 1.0 / (1.0 + std::exp(-margin)) : std::exp(margin) / (1.0 + std::exp(margin));
    }
  }
  return Tensor({n, 1, logits.dim(2), logits.dim(3)}, std::move(out));
}

McDropoutResult forward_mc_dropout(const Model& model, const Tensor& batch, std::size_t passes, const Rng& rng) {
  if (model.config().dropout_rate <= 0.0) {
    throw InvalidState("MC dropout needs a model built with dropout_rate > 0");
  }
  if (passes < 2) throw InvalidArgument("MC dropout needs at least 2 passes");

  const bool segmentation = model.config().task == Task::kSegmentation;
  std::vector<Tensor> samples;      // per-pass value whose variance is reported
  std::vector<Tensor> predictions;  // per-pass probabilities or raw outputs
  samples.reserve(passes);
  predictions.reserve(passes);
  for (std::size_t t = 0; t < passes; ++t) {
    Tape tape(Tape::Mode::kInference);
    Rng pass_rng = rng.split(t);
    Tensor pred = model.forward(tape, batch, true, pass_rng).prediction;
    if (segmentation) {
      Tensor fg = foreground_probability(pred);
      std::vector<double> probs(pred.numel());
      const std::size_t n = pred.dim(0), hw = pred.dim(2) * pred.dim(3);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < hw; ++p) {
          const double f = fg.values()[i * hw + p];
          probs[(i * 2) * hw + p] = 1.0 - f;
          probs[(i * 2 + 1) * hw + p] = f;
        }
      }
      predictions.emplace_back(pred.shape(), std::move(probs));
      samples.push_back(fg);
    } else {
      predictions.push_back(pred);
      samples.push_back(pred);
    }
  }

  std::vector<double> mean_pred(predictions[0].numel(), 0.0);
  for (const Tensor& p : predictions) {
    for (std::size_t i = 0; i < mean_pred.size(); ++i) mean_pred[i] += p.values()[i];
  }
  for (double& m : mean_pred) m /= static_cast<double>(passes);

  const std::size_t pixels = samples[0].numel();
  std::vector<double> variance(pixels, 0.0);
  for (std::size_t i = 0; i < pixels; ++i) {
    const double first = samples[0].values()[i];
    bool all_equal = true;
    double total = 0.0;
    for (const Tensor& s : samples) {
      total += s.values()[i];
      all_equal = all_equal && s.values()[i] == first;
    }
    if (all_equal) continue;
    const double m = total / static_cast<double>(passes);
    double sq = 0.0;
    for (const Tensor& s : samples) sq += (s.values()[i] - m) * (s.values()[i] - m);
    variance[i] = sq / static_cast<double>(passes - 1);
  }

  McDropoutResult result;
  result.mean_prediction = Tensor(predictions[0].shape(), std::move(mean_pred));
  result.model_uncertainty = Tensor(samples[0].shape(), std::move(variance));
  result.samples_used = passes;
  return result;
}

}  // namespace fpu::models
