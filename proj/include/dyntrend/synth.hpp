#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dyntrend/activeness.hpp"
#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/proximity.hpp"
#include "dyntrend/rng.hpp"
#include "dyntrend/simulation.hpp"

namespace dyntrend {

/// Uniform random graph with round(n * mean_degree / 2) distinct edges
/// (n * mean_degree arcs when directed).
inline Graph random_graph(std::size_t node_count, double mean_degree, bool directed, std::uint64_t seed) {
  if (node_count < 2) throw ValidationError("random graph needs at least 2 nodes");
  if (!(mean_degree >= 0.0)) throw ValidationError("mean degree must be >= 0");
  const double pairs = static_cast<double>(node_count) * static_cast<double>(node_count - 1) / (directed ? 1.0 : 2.0);
  const double wanted = std::round(static_cast<double>(node_count) * mean_degree / (directed ? 1.0 : 2.0));
  if (wanted > pairs) throw ValidationError("mean degree too large for node count");
  const auto m = static_cast<std::size_t>(wanted);

  auto engine = make_engine(seed);
  std::set<std::pair<NodeId, NodeId>> chosen;
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(m);
  while (edges.size() < m) {
    auto u = static_cast<NodeId>(engine() % node_count);
    auto v = static_cast<NodeId>(engine() % node_count);
    if (u == v) continue;
    if (!directed && v < u) std::swap(u, v);
    if (chosen.emplace(u, v).second) edges.emplace_back(u, v);
  }
  return Graph::from_edges(node_count, edges, directed);
}

/// The subgraph on nodes with at least one neighbor, labels kept. Edge files
/// cannot express isolated nodes, so this is what survives a write/read cycle.
inline Graph drop_isolated(const Graph& g) {
  std::vector<NodeId> remap(g.node_count(), -1);
  std::vector<std::string> labels;
  for (NodeId u = 0; static_cast<std::size_t>(u) < g.node_count(); ++u) {
    if (g.out_neighbors(u).empty() && g.in_neighbors(u).empty()) continue;
    remap[u] = static_cast<NodeId>(labels.size());
    labels.push_back(g.label(u));
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; static_cast<std::size_t>(u) < g.node_count(); ++u) {
    for (const NodeId v : g.out_neighbors(u)) {
      if (g.directed() || u < v) edges.emplace_back(remap[u], remap[v]);
    }
  }
  const std::size_t n = labels.size();
  return Graph::from_edges(n, edges, g.directed(), std::move(labels));
}

struct SynthConfig {
  DAParams params;
  std::size_t seed_count = 5;
  double horizon = 10.0;      // generate on [t0, horizon)
  std::uint64_t seed = 0;
  std::size_t max_actions = 0;  // if > 0, stop once this many actions (seeds included) exist
  bool allow_supercritical = false;
  std::size_t max_events = 10'000'000;
};

struct SynthResult {
  Trend trend;
  std::vector<NodeId> seeds;
  double branching_bound = 0.0;  // alpha * tau * max row sum
  std::optional<double> empirical_branching;
  bool truncated = false;  // stopped by max_actions
};

/// Forward-simulates the model from `seed_count` distinct random nodes acting
/// at t0. Refuses supercritical parameters unless explicitly allowed, and then
/// only with an action cap.
inline SynthResult synthesize(const Graph& graph, const ProximityMap& prox, const SynthConfig& cfg) {
  cfg.params.validate();
  if (cfg.seed_count < 1 || cfg.seed_count > graph.node_count()) {
    throw ValidationError("seed count must be in [1, node count]");
  }
  if (!(cfg.horizon > cfg.params.t0)) throw ValidationError("horizon must be after t0");

  SynthResult result;
  result.branching_bound = cfg.params.alpha * cfg.params.tau * prox.max_row_sum();
  if (result.branching_bound >= 1.0) {
    if (!cfg.allow_supercritical) {
      throw ValidationError("supercritical parameters refused: alpha * tau * max row sum = " +
                            text::real(result.branching_bound) + " >= 1");
    }
    if (cfg.max_actions == 0) throw ValidationError("supercritical synthesis requires an action cap");
  }
  if (cfg.max_actions > 0 && cfg.max_actions <= cfg.seed_count) {
    throw ValidationError("action cap must exceed the seed count");
  }

  auto engine = make_engine(derive_seed(cfg.seed, 0x5eed));
  std::vector<NodeId> pool(graph.node_count());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<NodeId>(i);
  for (std::size_t i = 0; i < cfg.seed_count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(engine() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  result.seeds.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.seed_count));
  std::sort(result.seeds.begin(), result.seeds.end());

  std::vector<Action> seed_actions;
  for (const NodeId s : result.seeds) seed_actions.push_back({s, cfg.params.t0});
  const Trend seeds(seed_actions);

  SimConfig sim;
  sim.t_start = cfg.params.t0;
  sim.t_end = cfg.horizon;
  sim.seed = cfg.seed;
  sim.max_events = cfg.max_events;
  sim.stop_after = cfg.max_actions > 0 ? cfg.max_actions - cfg.seed_count : 0;
  auto run = simulate(init_streams(seeds, prox, cfg.params, cfg.params.t0), prox, cfg.params, sim, 0);

  // generated events at exactly t0 sort after the seeds (stable sort)
  std::vector<Action> all = seed_actions;
  all.insert(all.end(), run.actions.begin(), run.actions.end());
  result.trend = Trend(std::move(all));
  result.empirical_branching = run.branching_ratio();
  result.truncated = run.truncated;
  return result;
}

}  // namespace dyntrend
