#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fpu/cli/config.hpp"
#include "fpu/cli/evaluator.hpp"
#include "fpu/cli/run_record.hpp"
#include "fpu/metrics/timing.hpp"

namespace fpu::cli {

struct GlobalOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;       // overrides training.seed and dataset seed
  std::optional<std::filesystem::path> out;  // overrides the output directory
  bool force = false;
  std::size_t threads = 1;
};

// Keeps freed tensor buffers inside the process instead of returning them to
// the OS after every batch (glibc only; a no-op elsewhere).
void tune_allocator();

// Loads the config (defaults when no path is given) and applies overrides.
// A .json path is read as a run record and replays its config.
ExperimentConfig resolve_config(const GlobalOptions& global);

// Creates `dir`, refusing a non-empty existing directory unless forced.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

struct GenerateResult {
  std::filesystem::path manifest_path;
  synthdata::DatasetManifest manifest;
};
GenerateResult cmd_generate(const ExperimentConfig& config, const GlobalOptions& global, std::ostream& log);

struct TrainResult {
  std::filesystem::path checkpoint_path;
  std::filesystem::path record_path;
  RunRecord record;
};
TrainResult cmd_train(const ExperimentConfig& config, const GlobalOptions& global, std::ostream& log);

metrics::MetricsReport cmd_evaluate(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                                    const GlobalOptions& global, std::ostream& log);

UncertaintyAnalysis cmd_analyze_uncertainty(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                                            UncertaintyMode mode, std::size_t passes, const GlobalOptions& global,
                                            std::ostream& log);

struct TimingRow {
  std::string name;
  std::size_t passes = 1;
  metrics::TimingSummary summary;
};
struct BenchmarkResult {
  std::vector<TimingRow> rows;  // single-pass baseline, single-pass dual head, T-pass MC dropout
  double mc_over_single = 0.0;
  double dual_over_single = 0.0;
};
BenchmarkResult cmd_benchmark_time(const std::filesystem::path& checkpoint, std::size_t passes, std::size_t repeats,
                                   const GlobalOptions& global, std::ostream& log);

struct MetricComparison {
  std::string metric;
  std::optional<double> mean_a;
  std::optional<double> mean_b;
  std::optional<double> mean_difference;  // b - a over paired images
  std::size_t b_better = 0;
  std::size_t a_better = 0;
  std::size_t ties = 0;
  double sign_test_p = 1.0;  // two-sided exact binomial test, ties dropped
};
struct ComparisonResult {
  std::vector<MetricComparison> metrics;
  std::vector<std::size_t> paired_indices;
};
// Higher is better for every metric except err and mc.
ComparisonResult cmd_compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                             const GlobalOptions& global, std::ostream& log);

double sign_test_p_value(std::size_t positives, std::size_t negatives);

}  // namespace fpu::cli
