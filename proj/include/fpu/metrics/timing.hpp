#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fpu::metrics {

struct TimingSummary {
  std::vector<double> seconds;  // one entry per timed call, in call order
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;

  double iqr() const { return q3 - q1; }
};

inline constexpr std::size_t kWarmupRuns = 2;

// Linear-interpolation quantile (numpy's default) of unsorted values.
double quantile(std::vector<double> values, double q);
TimingSummary summarize_timings(std::vector<double> seconds);

// Calls runner kWarmupRuns times untimed, then `repeats` times timed with a
// steady clock. Throws InvalidArgument if repeats < 5.
TimingSummary time_inference(const std::function<void()>& runner, std::size_t repeats);

// Times several runners round-robin so that slow drift in machine load hits
// all of them alike. The starting runner rotates each round.
std::vector<TimingSummary> time_interleaved(const std::vector<std::function<void()>>& runners,
                                            std::size_t repeats);

}  // namespace fpu::metrics
