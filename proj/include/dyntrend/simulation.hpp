#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "dyntrend/activeness.hpp"
#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/proximity.hpp"
#include "dyntrend/report.hpp"
#include "dyntrend/rng.hpp"

namespace dyntrend {

/// Poisson stream with rate coefficient * exp(-(t - anchor) / tau) for t >= anchor.
/// Its total mass coefficient * tau is finite, so it fires finitely often.
struct DecayingStream {
  double coefficient = 0.0;
  double anchor = 0.0;
  NodeId target = 0;
};

/// First event of `stream` after time `after` by inverse-CDF sampling of the
/// integrated rate, given a uniform draw u in (0, 1). nullopt means the stream
/// never fires again.
inline std::optional<double> sample_next(const DecayingStream& stream, double tau, double after, double u) {
  if (!(stream.coefficient > 0.0)) return std::nullopt;
  const double remaining = stream.coefficient * tau * decay(after - stream.anchor, tau);
  const double target_mass = -std::log1p(-u);
  if (!(target_mass < remaining)) return std::nullopt;
  return after - tau * std::log1p(-target_mass / remaining);
}

struct SimConfig {
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  std::size_t max_events = 10'000'000;  // explosion guard per run
  std::size_t stop_after = 0;           // if > 0, end a run quietly after this many events
  double mass_floor = 1e-12;            // streams with coefficient * tau below this are dropped
  std::size_t threads = 0;              // 0 = hardware concurrency

  void validate() const {
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || t_end < t_start) {
      throw ValidationError("simulation needs finite t_start <= t_end");
    }
    if (runs < 1) throw ValidationError("runs must be >= 1");
    if (max_events < 1) throw ValidationError("max_events must be >= 1");
  }
};

/// Streams carrying the influence of the observed prefix past t_start: one per
/// (observed action, reachable node), plus one baseline stream per node.
inline std::vector<DecayingStream> init_streams(const Trend& observed, const ProximityMap& prox,
                                                const DAParams& params, double t_start,
                                                double mass_floor = 1e-12) {
  params.validate();
  std::vector<DecayingStream> streams;
  for (const auto& a : observed) {
    if (a.time > t_start) break;
    const double carried = params.alpha * decay(t_start - a.time, params.tau);
    for (const auto& e : prox.row(a.node)) {
      const double c = carried * e.score;
      if (c * params.tau >= mass_floor && c > 0.0) streams.push_back({c, t_start, e.node});
    }
  }
  const double base = params.epsilon * decay(t_start - params.t0, params.tau);
  if (base > 0.0 && base * params.tau >= mass_floor) {
    for (NodeId v = 0; static_cast<std::size_t>(v) < prox.node_count(); ++v) {
      streams.push_back({base, t_start, v});
    }
  }
  return streams;
}

struct SimRun {
  Trend actions;                 // generated actions, all in [t_start, t_end)
  std::size_t offspring = 0;     // events fired by streams that a generated event spawned
  bool truncated = false;        // stopped by stop_after

  /// Offspring per generated event; nullopt without events.
  std::optional<double> branching_ratio() const {
    if (actions.empty()) return std::nullopt;
    return static_cast<double>(offspring) / static_cast<double>(actions.size());
  }
};

/// One run of the event-queue simulation. Every live stream keeps one pending
/// event; the earliest is pulled, recorded, and spawns streams alpha *
/// prox(v, .) anchored at its time, then its own stream is resampled.
///
/// Draw k of stream s is a pure function of (seed, run_index, s, k).
inline SimRun simulate(std::vector<DecayingStream> streams, const ProximityMap& prox, const DAParams& params,
                       const SimConfig& config, std::size_t run_index = 0) {
  params.validate();
  config.validate();
  const std::uint64_t key = derive_seed(config.seed, run_index);
  const double tau = params.tau;

  struct Pending {
    double time;
    std::size_t stream;
    bool operator>(const Pending& o) const { return time != o.time ? time > o.time : stream > o.stream; }
  };
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
  std::vector<std::uint64_t> draws(streams.size(), 0);
  std::vector<bool> spawned(streams.size(), false);

  auto schedule = [&](std::size_t s, double after) {
    const double u = counter_uniform(key, s, draws[s]++);
    if (const auto t = sample_next(streams[s], tau, after, u); t && *t < config.t_end) {
      queue.push({*t, s});
    }
  };
  for (std::size_t s = 0; s < streams.size(); ++s) schedule(s, std::max(streams[s].anchor, config.t_start));

  SimRun run;
  std::vector<Action> out;
  while (!queue.empty()) {
    const Pending next = queue.top();
    queue.pop();
    if (next.time >= config.t_end) break;
    if (out.size() >= config.max_events) throw ExplosionError(config.max_events, run_index);
    const NodeId node = streams[next.stream].target;
    out.push_back({node, next.time});
    if (spawned[next.stream]) ++run.offspring;
    if (config.stop_after > 0 && out.size() >= config.stop_after) {
      run.truncated = true;
      break;
    }

    if (params.alpha > 0.0) {
      for (const auto& e : prox.row(node)) {
        const double c = params.alpha * e.score;
        if (c * tau < config.mass_floor) continue;
        streams.push_back({c, next.time, e.node});
        draws.push_back(0);
        spawned.push_back(true);
        schedule(streams.size() - 1, next.time);
      }
    }
    schedule(next.stream, next.time);
  }
  run.actions = Trend(std::move(out));
  return run;
}

/// Monte Carlo forecast over `grid` (which must span [t_start, t_end)).
/// Runs are independent and may execute in parallel; the report depends only
/// on the inputs and the seed. `keep_runs`, when given, receives each run's
/// generated actions in run order.
inline PredictionReport predict(const Trend& observed, const ProximityMap& prox, const DAParams& params,
                                const SimConfig& config, const IntervalGrid& grid, double theta,
                                Measure measure, std::vector<Trend>* keep_runs = nullptr) {
  config.validate();
  const double scale = std::max({1.0, std::abs(config.t_start), std::abs(config.t_end)});
  if (std::abs(grid.t_start() - config.t_start) > 1e-9 * scale ||
      std::abs(grid.t_end() - config.t_end) > 1e-9 * scale) {
    throw ValidationError("prediction grid must span [t_start, t_end)");
  }
  const Trend history = prefix(observed, config.t_start);
  const auto initial = init_streams(history, prox, params, config.t_start, config.mass_floor);
  // rows are filled lazily; warm the ones the seeds will need before going parallel
  for (const auto& s : initial) (void)prox.row(s.target);

  std::vector<RunSeries> series(config.runs);
  std::vector<Trend> kept(keep_runs ? config.runs : 0);
  parallel_for_index(config.runs, config.threads, [&](std::size_t r) {
    auto run = simulate(initial, prox, params, config, r);
    series[r] = to_run_series(aggregate(run.actions, grid));
    if (keep_runs) kept[r] = std::move(run.actions);
  });
  if (keep_runs) *keep_runs = std::move(kept);
  auto report = summarize_runs(series, grid, theta, measure);
  report.model = "da";
  return report;
}

}  // namespace dyntrend
