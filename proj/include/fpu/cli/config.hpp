#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpu/models/model.hpp"
#include "fpu/synthdata/dataset.hpp"

namespace fpu::cli {

enum class LossKind { kMse, kCe, kHetReg, kHetCls };
std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);

struct DatasetSection {
  // Dataset directory (manifest.json inside). Relative paths in a config file
  // are resolved against the file's directory.
  std::filesystem::path path = "data";
  synthdata::DatasetOptions generation;
};

struct TrainingSection {
  LossKind loss = LossKind::kCe;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::size_t samples = 5;  // noise draws T for het_cls
  std::uint64_t seed = 0;
};

struct EvaluationSection {
  std::vector<std::string> metrics;  // empty = all metrics for the task
  double threshold = 0.5;
  std::size_t patch = 16;
  std::size_t mc_passes = 5;
};

struct ExperimentConfig {
  DatasetSection dataset;
  models::ModelConfig model;  // height, width and seed follow dataset/training
  TrainingSection training;
  EvaluationSection evaluation;
  std::filesystem::path output_dir = "run";

  // Rejects loss/task/head mismatches and out-of-range values before any work.
  void validate() const;
  // Metrics to compute: the configured list or the task's full set.
  std::vector<std::string> resolved_metrics() const;
  // Keeps model.seed, height and width in step with the other sections.
  void sync_model();
};

// Sections [dataset], [model], [training], [evaluation], [output] of
// key = value lines. Unknown sections or keys are errors. Ranges are written
// "lo, hi".
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_ini(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

}  // namespace fpu::cli
