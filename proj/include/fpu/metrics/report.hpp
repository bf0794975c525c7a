#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpu/metrics/psnr.hpp"

namespace fpu::metrics {

struct ImageMetrics {
  std::size_t index = 0;  // dataset sample index
  std::optional<double> dice;
  std::optional<double> jaccard;
  std::optional<double> err;
  std::optional<double> hc;
  std::optional<double> mc;
  std::optional<Psnr> psnr;

  bool operator==(const ImageMetrics&) const = default;
};

struct MetricsSummary {
  std::optional<double> dice;
  std::optional<double> jaccard;
  std::optional<double> err;
  std::optional<double> hc;
  std::optional<double> mc;
  // Infinite if any image is infinite.
  std::optional<Psnr> psnr;

  bool operator==(const MetricsSummary&) const = default;
};

struct MetricsReport {
  std::string model_id;
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::vector<ImageMetrics> per_image;
  MetricsSummary mean;

  bool operator==(const MetricsReport&) const = default;
};

// Mean of each metric over the images that report it.
MetricsSummary summarize(const std::vector<ImageMetrics>& per_image);

// Emitted numbers carry 6 significant digits; readers return exactly the
// emitted values, so write -> read -> write is a fixed point.
double round_significant(double value, int digits = 6);
nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
// Header "index,dice,jaccard,err,hc,mc,psnr"; one row per image then a row
// with index "mean". Absent values are empty fields, infinite PSNR is "inf".
std::string to_csv(const MetricsReport& report);
// Reads the CSV form back. Metadata is not part of the CSV and stays empty.
MetricsReport report_from_csv(const std::string& text);

void write_report(const MetricsReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path);
MetricsReport read_report_json(const std::filesystem::path& path);

}  // namespace fpu::metrics
