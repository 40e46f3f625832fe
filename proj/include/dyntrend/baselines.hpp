#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/report.hpp"
#include "dyntrend/rng.hpp"
#include "dyntrend/simulation.hpp"

namespace dyntrend {

// Independent-cascade models with propagation delays. A node activates at most
// once; each activation gets one chance per inactive out-neighbor.
//   tequ: one fixed delay for the whole trend
//   texp: exponential delays with one rate for the whole trend
//   eexp: exponential delays with a rate per edge

enum class BaselineKind { tequ, texp, eexp };

inline BaselineKind parse_baseline(std::string_view s) {
  if (s == "tequ") return BaselineKind::tequ;
  if (s == "texp") return BaselineKind::texp;
  if (s == "eexp") return BaselineKind::eexp;
  throw ValidationError("unknown baseline '" + std::string(s) + "'");
}

inline const char* to_string(BaselineKind k) noexcept {
  switch (k) {
    case BaselineKind::tequ: return "tequ";
    case BaselineKind::texp: return "texp";
    case BaselineKind::eexp: return "eexp";
  }
  return "?";
}

inline constexpr double kFallbackActivationProb = 0.01;

inline std::uint64_t edge_key(NodeId u, NodeId v) noexcept {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) | static_cast<std::uint32_t>(v);
}

struct BaselineParams {
  BaselineKind kind = BaselineKind::tequ;
  double activation_prob = kFallbackActivationProb;
  double delay_equal = 1.0;                               // tequ
  double delay_rate = 1.0;                                // texp
  std::unordered_map<std::uint64_t, double> edge_rates;   // eexp, fitted edges
  double default_edge_rate = 1.0;                         // eexp, edges never observed
  double mult_factor = 1.0;
  bool fallback = false;  // no attributable activations; defaults were used

  void validate() const {
    if (!(activation_prob >= 0.0 && activation_prob <= 1.0)) {
      throw ValidationError("activation probability must be in [0,1]");
    }
    if (!(delay_equal > 0.0) || !(delay_rate > 0.0) || !(default_edge_rate > 0.0)) {
      throw ValidationError("delays and delay rates must be > 0");
    }
    if (!(mult_factor > 0.0)) throw ValidationError("multiple-action factor must be > 0");
  }

  double edge_rate(NodeId u, NodeId v) const {
    const auto it = edge_rates.find(edge_key(u, v));
    return it == edge_rates.end() ? default_edge_rate : it->second;
  }
};

struct ActivationRecord {
  NodeId node;
  double time;
  std::optional<NodeId> parent;  // nullopt marks a seed
};

/// First activation of every node in the observed prefix, each attributed to
/// its earliest-activated in-neighbor that was active strictly earlier (ties to
/// the smaller index). Sorted by activation time.
inline std::vector<ActivationRecord> attribute_activations(const Trend& observed, const Graph& graph) {
  constexpr double never = std::numeric_limits<double>::infinity();
  std::vector<double> first(graph.node_count(), never);
  std::vector<ActivationRecord> records;
  for (const auto& a : observed) {
    if (first.at(a.node) == never) {
      first[a.node] = a.time;
      records.push_back({a.node, a.time, std::nullopt});
    }
  }
  for (auto& r : records) {
    double best = never;
    for (const NodeId u : graph.in_neighbors(r.node)) {
      if (first[u] < r.time && (first[u] < best || (first[u] == best && u < *r.parent))) {
        best = first[u];
        r.parent = u;
      }
    }
  }
  return records;
}

/// Attribution-counting estimator: activation probability is attributed
/// activations over exposure opportunities; delays come from parent-child gaps.
inline BaselineParams fit_baseline(BaselineKind kind, const Trend& trend, const Graph& graph, double t_star) {
  const Trend observed = prefix(trend, t_star);
  if (observed.empty()) throw ValidationError("baseline fitting needs a non-empty prefix");
  const auto records = attribute_activations(observed, graph);

  constexpr double never = std::numeric_limits<double>::infinity();
  std::vector<double> first(graph.node_count(), never);
  for (const auto& r : records) first[r.node] = r.time;

  std::size_t opportunities = 0;
  for (const auto& r : records) {
    for (const NodeId w : graph.out_neighbors(r.node)) opportunities += first[w] > r.time;
  }

  std::size_t attributed = 0;
  double gap_sum = 0.0;
  std::unordered_map<std::uint64_t, std::pair<double, std::size_t>> per_edge;
  for (const auto& r : records) {
    if (!r.parent) continue;
    ++attributed;
    const double gap = r.time - first[*r.parent];
    gap_sum += gap;
    auto& e = per_edge[edge_key(*r.parent, r.node)];
    e.first += gap;
    ++e.second;
  }

  BaselineParams p;
  p.kind = kind;
  if (attributed == 0) {
    p.fallback = true;
    p.activation_prob = kFallbackActivationProb;
    const double span = t_star - observed.first_time();
    const double mean_gap = span > 0.0 ? span / static_cast<double>(records.size()) : 1.0;
    p.delay_equal = mean_gap;
    p.delay_rate = 1.0 / mean_gap;
    p.default_edge_rate = p.delay_rate;
    return p;
  }
  const double mean_gap = gap_sum / static_cast<double>(attributed);
  p.activation_prob = static_cast<double>(attributed) / static_cast<double>(opportunities);
  p.delay_equal = mean_gap;
  p.delay_rate = 1.0 / mean_gap;
  p.default_edge_rate = p.delay_rate;
  if (kind == BaselineKind::eexp) {
    for (const auto& [key, e] : per_edge) p.edge_rates[key] = static_cast<double>(e.second) / e.first;
  }
  return p;
}

/// One cascade run. Nodes active by t_start are seeds; an attempt that would
/// land at or before t_start is discarded (that chance was already spent in
/// the observed window). Returns the new activations in [t_start, t_end).
inline Trend simulate_baseline(const BaselineParams& params, const Graph& graph, const Trend& observed,
                               const SimConfig& config, std::size_t run_index = 0) {
  params.validate();
  config.validate();
  auto engine = make_engine(derive_seed(config.seed, run_index));
  const Trend history = prefix(observed, config.t_start);

  std::vector<std::uint8_t> active(graph.node_count(), 0);
  std::vector<ActivationRecord> seeds;
  for (const auto& a : history) {
    if (!active.at(a.node)) {
      active[a.node] = 1;
      seeds.push_back({a.node, a.time, std::nullopt});
    }
  }

  struct Attempt {
    double time;
    NodeId node;
    bool operator>(const Attempt& o) const { return time != o.time ? time > o.time : node > o.node; }
  };
  std::priority_queue<Attempt, std::vector<Attempt>, std::greater<>> queue;

  auto expose = [&](NodeId u, double t) {
    for (const NodeId w : graph.out_neighbors(u)) {
      if (active[w]) continue;
      // draw the coin first so every neighbor consumes the same randomness
      const bool success = uniform01(engine) < params.activation_prob;
      double delay = 0.0;
      switch (params.kind) {
        case BaselineKind::tequ: delay = params.delay_equal; break;
        case BaselineKind::texp: delay = exponential(engine, params.delay_rate); break;
        case BaselineKind::eexp: delay = exponential(engine, params.edge_rate(u, w)); break;
      }
      const double when = t + delay;
      if (success && when > config.t_start && when < config.t_end) queue.push({when, w});
    }
  };
  for (const auto& s : seeds) expose(s.node, s.time);

  std::vector<Action> out;
  while (!queue.empty()) {
    const Attempt next = queue.top();
    queue.pop();
    if (active[next.node]) continue;
    if (out.size() >= config.max_events) throw ExplosionError(config.max_events, run_index);
    active[next.node] = 1;
    out.push_back({next.node, next.time});
    expose(next.node, next.time);
  }
  return Trend(std::move(out));
}

/// Intensity predicted as factor * coverage (not rounded).
inline std::vector<double> intensity_from_coverage(std::span<const double> coverage, double factor) {
  if (!(factor > 0.0)) throw ValidationError("multiple-action factor must be > 0");
  std::vector<double> out;
  out.reserve(coverage.size());
  for (const double c : coverage) out.push_back(factor * c);
  return out;
}

/// Least-squares slope through the origin of (coverage, intensity) pairs.
inline double fit_mult_factor(std::span<const double> coverage, std::span<const double> intensity) {
  if (coverage.size() != intensity.size()) throw ValidationError("series lengths differ");
  double cross = 0.0;
  double square = 0.0;
  for (std::size_t i = 0; i < coverage.size(); ++i) {
    cross += coverage[i] * intensity[i];
    square += coverage[i] * coverage[i];
  }
  if (square == 0.0) throw ValidationError("cannot fit multiple-action factor: coverage is zero everywhere");
  return cross / square;
}

inline double fit_mult_factor(const Trend& observed, const IntervalGrid& training) {
  const auto s = to_run_series(aggregate(observed, training));
  return fit_mult_factor(s.coverage, s.intensity);
}

/// Equal-length intervals ending at t_star that cover the whole prefix.
inline IntervalGrid training_grid(const Trend& observed, double t_star, double length) {
  const Trend p = prefix(observed, t_star);
  if (p.empty()) throw ValidationError("empty prefix has no training intervals");
  const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil((t_star - p.first_time()) / length)));
  return IntervalGrid(t_star - static_cast<double>(count) * length, length, count);
}

/// Monte Carlo forecast with the cascade model. With `mult`, intensity is
/// params.mult_factor times coverage, so both share one coefficient of variation.
inline PredictionReport predict_baseline(const BaselineParams& params, const Graph& graph, const Trend& observed,
                                         const SimConfig& config, const IntervalGrid& grid, double theta,
                                         Measure measure, bool mult, std::vector<Trend>* keep_runs = nullptr) {
  config.validate();
  const double scale = std::max({1.0, std::abs(config.t_start), std::abs(config.t_end)});
  if (std::abs(grid.t_start() - config.t_start) > 1e-9 * scale ||
      std::abs(grid.t_end() - config.t_end) > 1e-9 * scale) {
    throw ValidationError("prediction grid must span [t_start, t_end)");
  }
  std::vector<RunSeries> series(config.runs);
  std::vector<Trend> kept(keep_runs ? config.runs : 0);
  parallel_for_index(config.runs, config.threads, [&](std::size_t r) {
    auto run = simulate_baseline(params, graph, observed, config, r);
    series[r] = to_run_series(aggregate(run, grid));
    if (mult) series[r].intensity = intensity_from_coverage(series[r].coverage, params.mult_factor);
    if (keep_runs) kept[r] = std::move(run);
  });
  if (keep_runs) *keep_runs = std::move(kept);
  auto report = summarize_runs(series, grid, theta, measure);
  if (mult) report.intensity_cv = report.coverage_cv;
  report.model = std::string(to_string(params.kind)) + (mult ? "-mult" : "");
  return report;
}

}  // namespace dyntrend
