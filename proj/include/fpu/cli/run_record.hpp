#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpu/cli/config.hpp"
#include "fpu/metrics/report.hpp"
#include "fpu/metrics/timing.hpp"
#include "fpu/metrics/uncertainty.hpp"

namespace fpu::cli {

struct RunRecord {
  ExperimentConfig config;
  std::string dataset_hash;
  std::vector<double> loss_curve;
  metrics::MetricsReport metrics;
  std::optional<metrics::UncertaintyStats> uncertainty;
  std::optional<metrics::TimingSummary> timing;
  std::map<std::string, std::string> artifact_hashes;  // file name -> SHA-256
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);
void write_run_record(const RunRecord& record, const std::filesystem::path& path);
RunRecord read_run_record(const std::filesystem::path& path);

nlohmann::json to_json(const metrics::TimingSummary& timing);
metrics::TimingSummary timing_from_json(const nlohmann::json& j);

}  // namespace fpu::cli
