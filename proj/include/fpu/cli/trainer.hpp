#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fpu/cli/config.hpp"
#include "fpu/models/model.hpp"
#include "fpu/synthdata/dataset.hpp"

namespace fpu::cli {

struct TrainingResult {
  std::vector<double> loss_curve;  // mean training loss per epoch
  std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Stacks images into a [N,1,H,W] tensor.
ndgrad::Tensor stack_images(const std::vector<const synthdata::Image*>& images);

// Adam over shuffled mini-batches. Inputs are the degraded images; targets are
// masks for segmentation and clean images for reconstruction. Shuffling,
// dropout and loss noise draw from separate streams of `options.seed`, so two
// models trained with the same seed see identical batches and dropout masks.
// A non-finite loss aborts with NumericalError describing the batch.
TrainingResult train_model(models::Model& model, const std::vector<synthdata::Sample>& samples,
                           const TrainingSection& options, const EpochCallback& on_epoch = {});

// Warning text when the least-squares slope of the final quarter of the curve
// is positive; empty otherwise (and for fewer than 4 epochs).
std::string divergence_warning(const std::vector<double>& loss_curve);

}  // namespace fpu::cli
