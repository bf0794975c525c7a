#include "fpu/metrics/uncertainty.hpp"

#include "fpu/error.hpp"

namespace fpu::metrics {

namespace {

std::optional<double> mean_or_absent(double sum, std::size_t count) {
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void UncertaintyAccumulator::add(std::span<const double> variance, std::span<const double> gt,
                                 std::span<const double> pred) {
  if (variance.size() != gt.size() || gt.size() != pred.size()) {
    throw InvalidArgument("uncertainty_stats: variance, ground truth and prediction sizes differ");
  }
  for (std::size_t i = 0; i < variance.size(); ++i) {
    const double v = variance[i];
    if (!(v >= 0.0)) throw InvalidArgument("uncertainty_stats: variance must be non-negative");
    if ((gt[i] != 0.0 && gt[i] != 1.0) || (pred[i] != 0.0 && pred[i] != 1.0)) {
      throw InvalidArgument("uncertainty_stats: masks must be binary");
    }
    if (gt[i] == 1.0) {
      sum_foreground += v;
      ++count_foreground;
    } else {
      sum_background += v;
      ++count_background;
    }
    if (pred[i] == gt[i]) {
      sum_correct += v;
      ++count_correct;
    } else {
      sum_incorrect += v;
      ++count_incorrect;
    }
  }
}

UncertaintyStats UncertaintyAccumulator::stats() const {
  return {mean_or_absent(sum_foreground, count_foreground),
          mean_or_absent(sum_background, count_background),
          mean_or_absent(sum_correct, count_correct),
          mean_or_absent(sum_incorrect, count_incorrect),
          count_foreground,
          count_background,
          count_correct,
          count_incorrect};
}

UncertaintyStats uncertainty_stats(std::span<const double> variance, std::span<const double> gt,
                                   std::span<const double> pred) {
  UncertaintyAccumulator acc;
  acc.add(variance, gt, pred);
  return acc.stats();
}

nlohmann::json to_json(const UncertaintyStats& s) {
  return {{"mean_var_foreground", optional_json(s.mean_var_foreground)},
          {"mean_var_background", optional_json(s.mean_var_background)},
          {"mean_var_correct", optional_json(s.mean_var_correct)},
          {"mean_var_incorrect", optional_json(s.mean_var_incorrect)},
          {"count_foreground", s.count_foreground},
          {"count_background", s.count_background},
          {"count_correct", s.count_correct},
          {"count_incorrect", s.count_incorrect}};
}

UncertaintyStats uncertainty_stats_from_json(const nlohmann::json& j) {
  try {
    return {optional_from(j.at("mean_var_foreground")),
            optional_from(j.at("mean_var_background")),
            optional_from(j.at("mean_var_correct")),
            optional_from(j.at("mean_var_incorrect")),
            j.at("count_foreground").get<std::size_t>(),
            j.at("count_background").get<std::size_t>(),
            j.at("count_correct").get<std::size_t>(),
            j.at("count_incorrect").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed uncertainty stats: ") + e.what(), 0);
  }
}

}  // namespace fpu::metrics
