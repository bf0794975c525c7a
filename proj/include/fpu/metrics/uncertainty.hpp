#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <json.hpp>

namespace fpu::metrics {

// Mean variance over four pixel partitions: foreground/background by ground
// truth and correct/incorrect by comparing prediction with ground truth.
// A partition with no pixels has no mean.
struct UncertaintyStats {
  std::optional<double> mean_var_foreground;
  std::optional<double> mean_var_background;
  std::optional<double> mean_var_correct;
  std::optional<double> mean_var_incorrect;
  std::size_t count_foreground = 0;
  std::size_t count_background = 0;
  std::size_t count_correct = 0;
  std::size_t count_incorrect = 0;

  bool operator==(const UncertaintyStats&) const = default;
};

// Running sums for dataset-level statistics; merging is order independent
// up to floating-point summation order.
struct UncertaintyAccumulator {
  double sum_foreground = 0.0;
  double sum_background = 0.0;
  double sum_correct = 0.0;
  double sum_incorrect = 0.0;
  std::size_t count_foreground = 0;
  std::size_t count_background = 0;
  std::size_t count_correct = 0;
  std::size_t count_incorrect = 0;

  void add(std::span<const double> variance, std::span<const double> gt, std::span<const double> pred);
  UncertaintyStats stats() const;
};

// variance must be non-negative; the three spans must have equal length.
UncertaintyStats uncertainty_stats(std::span<const double> variance, std::span<const double> gt,
                                   std::span<const double> pred);

nlohmann::json to_json(const UncertaintyStats& stats);
UncertaintyStats uncertainty_stats_from_json(const nlohmann::json& j);

}  // namespace fpu::metrics
