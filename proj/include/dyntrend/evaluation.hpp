#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"

namespace dyntrend {

/// |truth - prediction| / truth; nullopt when truth is 0 (excluded from averages).
inline std::optional<double> error_ratio(double truth, double prediction) {
  if (truth == 0.0) return std::nullopt;
  if (truth < 0.0) throw ValidationError("error ratio needs truth >= 0");
  return std::abs(truth - prediction) / truth;
}

/// Sample standard deviation (n - 1) over the sample mean. nullopt for fewer
/// than two samples or a zero mean.
inline std::optional<double> coefficient_of_variation(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) return std::nullopt;
  double mean = 0.0;
  for (const double x : samples) mean += x;
  mean /= static_cast<double>(n);
  if (mean == 0.0) return std::nullopt;
  double ss = 0.0;
  for (const double x : samples) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::abs(mean);
}

/// True iff the measure exceeds theta on every interval of the series.
inline bool duration_flag(const AggregateSeries& series, std::int64_t theta, Measure measure) {
  return duration(series, theta, measure) == series.grid.count();
}

/// Fraction of (predicted, true) pairs that agree.
inline double duration_accuracy(std::span<const std::pair<bool, bool>> flags) {
  if (flags.empty()) throw ValidationError("duration accuracy needs at least one trend");
  std::size_t hits = 0;
  for (const auto& [predicted, truth] : flags) hits += (predicted == truth);
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

/// The measure on the last training interval, used as the duration threshold.
inline std::int64_t threshold_from_last_observed(const Trend& observed, const IntervalGrid& training,
                                                 Measure measure) {
  const auto series = aggregate(observed, training);
  return series.values(measure).back();
}

/// Majority vote of a per-run duration fraction.
inline bool duration_vote(double fraction) noexcept { return fraction > 0.5; }

}  // namespace dyntrend
