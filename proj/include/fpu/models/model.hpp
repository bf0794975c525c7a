#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpu/ndgrad/ops.hpp"

namespace fpu::models {

using ndgrad::Rng;
using ndgrad::Tape;
using ndgrad::Tensor;

enum class Task { kSegmentation, kReconstruction };
enum class HeadMode { kSingle, kDual };

std::string to_string(Task task);
std::string to_string(HeadMode mode);
Task parse_task(std::string_view text);
HeadMode parse_head_mode(std::string_view text);

inline constexpr double kLogVarianceMin = -10.0;
inline constexpr double kLogVarianceMax = 10.0;

struct ModelConfig {
  Task task = Task::kSegmentation;
  HeadMode head_mode = HeadMode::kSingle;
  std::size_t base_channels = 8;
  std::size_t depth = 3;
  double dropout_rate = 0.2;
  std::size_t height = 64;
  std::size_t width = 64;
  std::uint64_t seed = 0;

  // Prediction channels: two class logits for segmentation, one value otherwise.
  std::size_t output_channels() const { return task == Task::kSegmentation ? 2 : 1; }
  // Throws InvalidArgument when any field is out of range.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct DualHeadOutput {
  Tensor prediction;                  // [N,C,H,W]
  std::optional<Tensor> log_variance;  // [N,1,H,W], already clamped to [-10, 10]
};

struct McDropoutResult {
  // Segmentation: mean softmax probabilities [N,2,H,W]; reconstruction: mean output [N,1,H,W].
  Tensor mean_prediction;
  // Unbiased per-pixel variance over the passes of the foreground probability
  // (segmentation) or the reconstructed value, [N,1,H,W].
  Tensor model_uncertainty;
  std::size_t samples_used = 0;
};

struct NamedParameter {
  std::string name;
  Tensor value;
};

// U-shaped encoder-decoder with skip connections.
//
// Encoder level k runs a 3x3 conv with B*2^k channels, ReLU and dropout, then
// 2x2 max pooling. The bottleneck is the same block with B*2^depth channels.
// Each decoder level upsamples, concatenates the matching skip and applies
// the block again. A head block (3x3 conv, ReLU, 1x1 conv) turns the shared
// features into the prediction; dual-head models carry a second head block
// emitting the log-variance map.
//
// Parameters are initialised per layer from a stream keyed by (seed, layer
// name), so single- and dual-head models with the same seed share every
// parameter except the variance head.
class Model {
 public:
  explicit Model(ModelConfig config);

  // Parameters are shared handles, so copying would alias them.
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<NamedParameter>& named_parameters() const noexcept { return params_; }
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;

  // Dropout masks in train mode come from `rng`.
  DualHeadOutput forward(Tape& tape, const Tensor& batch, bool train_mode, Rng& rng) const;
  // Inference-only forward pass; never stochastic.
  DualHeadOutput predict(const Tensor& batch) const;

  // Replaces parameter values by name; shapes must match exactly.
  void load_parameters(const std::vector<NamedParameter>& values);

 private:
  struct Conv {
    Tensor kernel;
    Tensor bias;
    std::size_t padding;
  };

  Conv make_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t extent, bool zero_init);
  Tensor apply(Tape& tape, const Conv& conv, const Tensor& x) const;
  Tensor block(Tape& tape, const Conv& conv, const Tensor& x, bool train_mode, Rng& rng) const;

  ModelConfig config_;
  std::vector<Conv> encoder_;
  Conv bottleneck_;
  std::vector<Conv> decoder_;  // decoder_[k] produces level k
  Conv pred_hidden_, pred_out_;
  std::optional<Conv> var_hidden_, var_out_;
  std::vector<NamedParameter> params_;
};

Model build_model(const ModelConfig& config);

// Runs `passes` stochastic forward passes with dropout active, each drawing its
// masks from rng.split(pass index), and returns the per-pixel mean and variance.
// Throws InvalidState if the model has no dropout, InvalidArgument if passes < 2.
McDropoutResult forward_mc_dropout(const Model& model, const Tensor& batch, std::size_t passes, const Rng& rng);

// Softmax foreground probability from two-channel logits, [N,2,H,W] -> [N,1,H,W].
Tensor foreground_probability(const Tensor& logits);

}  // namespace fpu::models
