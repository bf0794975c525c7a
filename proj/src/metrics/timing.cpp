#include "fpu/metrics/timing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fpu/error.hpp"

namespace fpu::metrics {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

TimingSummary summarize_timings(std::vector<double> seconds) {
  TimingSummary s;
  s.median = quantile(seconds, 0.5);
  s.q1 = quantile(seconds, 0.25);
  s.q3 = quantile(seconds, 0.75);
  s.seconds = std::move(seconds);
  return s;
}

TimingSummary time_inference(const std::function<void()>& runner, std::size_t repeats) {
  if (repeats < 5) throw InvalidArgument("time_inference needs at least 5 repeats");
  for (std::size_t i = 0; i < kWarmupRuns; ++i) runner();
  std::vector<double> seconds;
  seconds.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    runner();
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return summarize_timings(std::move(seconds));
}

std::vector<TimingSummary> time_interleaved(const std::vector<std::function<void()>>& runners,
                                            std::size_t repeats) {
  if (repeats < 5) throw InvalidArgument("time_interleaved needs at least 5 repeats");
  for (const auto& runner : runners) {
    for (std::size_t i = 0; i < kWarmupRuns; ++i) runner();
  }
  std::vector<std::vector<double>> seconds(runners.size());
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t k = 0; k < runners.size(); ++k) {
      const std::size_t j = (r + k) % runners.size();
      const auto start = std::chrono::steady_clock::now();
      runners[j]();
      seconds[j].push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
  }
  std::vector<TimingSummary> out;
  for (auto& s : seconds) out.push_back(summarize_timings(std::move(s)));
  return out;
}

}  // namespace fpu::metrics
