#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/text.hpp"

namespace dyntrend {

enum class Kernel { shortest_path, random_walk };

inline Kernel parse_kernel(std::string_view s) {
  if (s == "sp" || s == "shortest_path") return Kernel::shortest_path;
  if (s == "rw" || s == "random_walk") return Kernel::random_walk;
  throw ValidationError("proximity kernel must be 'sp' or 'rw', got '" + std::string(s) + "'");
}

inline const char* to_string(Kernel k) noexcept {
  return k == Kernel::shortest_path ? "sp" : "rw";
}

struct ProximityConfig {
  Kernel kind = Kernel::shortest_path;
  double b = 10.0;             // shortest-path decay per hop
  double p = 0.4;              // restart probability of the random walk
  double floor = 1e-12;        // scores below this are dropped
  double rw_tolerance = 1e-8;  // max-entry change that ends the walk iteration
  std::size_t rw_max_iterations = 10000;

  void validate() const {
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("proximity b must be > 0");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("restart probability p must be in (0,1)");
    if (!(floor > 0.0 && floor < 1.0)) throw ValidationError("proximity floor must be in (0,1)");
    if (!(rw_tolerance > 0.0)) throw ValidationError("rw_tolerance must be > 0");
    if (rw_max_iterations == 0) throw ValidationError("rw_max_iterations must be >= 1");
  }

  /// Canonical text of the parameters that affect scores.
  std::string canonical() const {
    std::string s = to_string(kind);
    if (kind == Kernel::shortest_path) {
      s += ";b=" + text::exact(b);
    } else {
      s += ";p=" + text::exact(p) + ";tol=" + text::exact(rw_tolerance);
    }
    return s + ";floor=" + text::exact(floor);
  }
};

struct ProxEntry {
  NodeId node;
  double score;
};

/// One source's sparse proximity vector, sorted by target node.
using ProxRow = std::vector<ProxEntry>;

inline double score_in(const ProxRow& row, NodeId target) {
  const auto it = std::lower_bound(row.begin(), row.end(), target,
                                   [](const ProxEntry& e, NodeId v) { return e.node < v; });
  return (it != row.end() && it->node == target) ? it->score : 0.0;
}

/// exp(-b * dist) over the BFS ball whose scores stay above the floor.
inline ProxRow prox_shortest_path(const Graph& graph, NodeId source, const ProximityConfig& cfg) {
  if (!graph.valid(source)) throw ValidationError("source node out of range");
  std::size_t max_hops = 0;
  while (std::exp(-cfg.b * static_cast<double>(max_hops + 1)) >= cfg.floor) ++max_hops;

  ProxRow row{{source, 1.0}};
  std::vector<NodeId> frontier{source};
  std::vector<std::uint8_t> visited(graph.node_count(), 0);
  visited[source] = 1;
  for (std::size_t hop = 1; hop <= max_hops && !frontier.empty(); ++hop) {
    const double score = std::exp(-cfg.b * static_cast<double>(hop));
    std::vector<NodeId> next;
    for (const NodeId u : frontier) {
      for (const NodeId v : graph.out_neighbors(u)) {
        if (visited[v]) continue;
        visited[v] = 1;
        next.push_back(v);
        row.push_back({v, score});
      }
    }
    frontier = std::move(next);
  }
  std::sort(row.begin(), row.end(),
            [](const ProxEntry& a, const ProxEntry& c) { return a.node < c.node; });
  return row;
}

/// Rooted PageRank: stationary distribution of a walk that returns to the
/// source with probability p per step. Dangling nodes return with probability 1.
inline ProxRow prox_random_walk(const Graph& graph, NodeId source, const ProximityConfig& cfg) {
  if (!graph.valid(source)) throw ValidationError("source node out of range");
  const std::size_t n = graph.node_count();
  std::vector<double> cur(n, 0.0);
  std::vector<double> next(n, 0.0);
  std::vector<std::uint8_t> in_support(n, 0);
  std::vector<NodeId> support{source};
  in_support[source] = 1;
  cur[source] = 1.0;

  const double move = 1.0 - cfg.p;
  bool converged = false;
  for (std::size_t iter = 0; iter < cfg.rw_max_iterations; ++iter) {
    for (const NodeId u : support) next[u] = 0.0;
    double restart = cfg.p;
    const std::size_t support_size = support.size();
    for (std::size_t k = 0; k < support_size; ++k) {
      const NodeId u = support[k];
      const double mass = cur[u];
      if (mass == 0.0) continue;
      const auto nbrs = graph.out_neighbors(u);
      if (nbrs.empty()) {
        restart += move * mass;
        continue;
      }
      const double share = move * mass / static_cast<double>(nbrs.size());
      for (const NodeId v : nbrs) {
        if (!in_support[v]) {
          in_support[v] = 1;
          support.push_back(v);
          next[v] = 0.0;
        }
        next[v] += share;
      }
    }
    next[source] += restart;

    double delta = 0.0;
    for (const NodeId u : support) delta = std::max(delta, std::abs(next[u] - cur[u]));
    std::swap(cur, next);
    if (delta < cfg.rw_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ComputeError("random walk from node " + std::to_string(source) + " did not converge in " +
                       std::to_string(cfg.rw_max_iterations) + " iterations");
  }

  ProxRow row;
  for (const NodeId u : support) {
    if (cur[u] >= cfg.floor) row.push_back({u, std::min(cur[u], 1.0)});
  }
  std::sort(row.begin(), row.end(),
            [](const ProxEntry& a, const ProxEntry& c) { return a.node < c.node; });
  return row;
}

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t graph_fingerprint(const Graph& g) {
  std::uint64_t h = fnv1a(g.directed() ? "D" : "U");
  h = fnv1a(std::to_string(g.node_count()), h);
  for (NodeId u = 0; static_cast<std::size_t>(u) < g.node_count(); ++u) {
    h = fnv1a(g.label(u), h);
    h = fnv1a(":", h);
    for (const NodeId v : g.out_neighbors(u)) h = fnv1a(std::to_string(v) + ",", h);
    h = fnv1a(";", h);
  }
  return h;
}

/// Lazily filled, thread-safe cache of proximity rows for one graph and
/// kernel configuration. Completed rows never change. The graph must outlive
/// the map.
class ProximityMap {
 public:
  ProximityMap(const Graph& graph, ProximityConfig config)
      : graph_(&graph), config_(config), state_(std::make_unique<State>(graph.node_count())) {
    config_.validate();
  }

  /// A fixed map with caller-supplied rows and no backing graph; rows that
  /// were not supplied are treated as absent.
  static ProximityMap from_rows(std::size_t node_count,
                                std::vector<std::pair<NodeId, ProxRow>> rows) {
    ProximityMap m(node_count);
    for (auto& [source, row] : rows) {
      if (source < 0 || static_cast<std::size_t>(source) >= node_count) {
        throw ValidationError("row source out of range");
      }
      std::sort(row.begin(), row.end(),
                [](const ProxEntry& a, const ProxEntry& c) { return a.node < c.node; });
      for (const auto& e : row) {
        if (e.node < 0 || static_cast<std::size_t>(e.node) >= node_count) {
          throw ValidationError("row target out of range");
        }
      }
      m.insert(source, std::move(row));
    }
    return m;
  }

  std::size_t node_count() const noexcept { return state_->slots.size(); }
  const ProximityConfig& config() const noexcept { return config_; }
  const Graph* graph() const noexcept { return graph_; }

  bool has_row(NodeId source) const {
    return slot(source).load(std::memory_order_acquire) != nullptr;
  }

  /// Row of `source`, computing it on first use.
  const ProxRow& row(NodeId source) const { return data(source).entries; }

  /// Sum of the stored scores of a row that is already present.
  double row_sum(NodeId source) const {
    const auto* d = slot(source).load(std::memory_order_acquire);
    if (!d) throw ValidationError("proximity row for node " + std::to_string(source) + " not precomputed");
    return d->sum;
  }

  double score(NodeId source, NodeId target) const { return score_in(row(source), target); }

  void precompute(std::span<const NodeId> sources) const {
    for (const NodeId s : sources) (void)data(s);
  }

  void precompute_all() const {
    for (NodeId s = 0; static_cast<std::size_t>(s) < node_count(); ++s) (void)data(s);
  }

  /// Largest row sum over all nodes (forces every row).
  double max_row_sum() const {
    precompute_all();
    double best = 0.0;
    for (NodeId s = 0; static_cast<std::size_t>(s) < node_count(); ++s) best = std::max(best, row_sum(s));
    return best;
  }

  std::uint64_t fingerprint() const {
    if (!graph_) return fnv1a("explicit:" + std::to_string(node_count()));
    return fnv1a(config_.canonical(), graph_fingerprint(*graph_));
  }

  /// Text cache: a fingerprint header and one "source<TAB>target<TAB>score"
  /// line per stored entry.
  void save(std::ostream& out) const {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fingerprint()));
    out << "# dyntrend proximity cache v1\n# fingerprint " << hex << '\n'
        << "# config " << config_.canonical() << '\n';
    for (NodeId s = 0; static_cast<std::size_t>(s) < node_count(); ++s) {
      const auto* d = slot(s).load(std::memory_order_acquire);
      if (!d) continue;
      for (const auto& e : d->entries) out << s << '\t' << e.node << '\t' << text::exact(e.score) << '\n';
    }
  }

  /// Loads rows written by save(); refuses caches built for another graph or
  /// configuration.
  void load(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool checked = false;
    std::vector<ProxRow> rows(node_count());
    std::vector<std::uint8_t> present(node_count(), 0);
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fingerprint()));
    while (std::getline(in, line)) {
      ++line_no;
      const auto body = text::trim(line);
      if (body.empty()) continue;
      if (body.front() == '#') {
        constexpr std::string_view tag = "# fingerprint ";
        if (body.substr(0, tag.size()) == tag) {
          if (text::trim(body.substr(tag.size())) != hex) {
            throw ValidationError("proximity cache fingerprint does not match graph/config");
          }
          checked = true;
        }
        continue;
      }
      if (!checked) throw ParseError("proximity cache row before fingerprint header", line_no);
      const auto f = text::split(body, '\t');
      if (f.size() != 3) throw ParseError("expected source<TAB>target<TAB>score", line_no);
      const auto s = text::parse_int(f[0]);
      const auto t = text::parse_int(f[1]);
      const auto v = text::parse_real(f[2]);
      if (!s || !t || !v || *s < 0 || *t < 0 || static_cast<std::size_t>(*s) >= node_count() ||
          static_cast<std::size_t>(*t) >= node_count()) {
        throw ParseError("bad proximity cache entry", line_no);
      }
      rows[*s].push_back({static_cast<NodeId>(*t), *v});
      present[*s] = 1;
    }
    if (!checked) throw ValidationError("proximity cache has no fingerprint header");
    for (NodeId s = 0; static_cast<std::size_t>(s) < node_count(); ++s) {
      if (present[s] && !has_row(s)) insert(s, std::move(rows[s]));
    }
  }

 private:
  struct RowData {
    ProxRow entries;
    double sum = 0.0;
  };

  struct State {
    explicit State(std::size_t n) : slots(n) {
      for (auto& s : slots) s.store(nullptr, std::memory_order_relaxed);
    }
    std::vector<std::atomic<const RowData*>> slots;
    std::vector<std::unique_ptr<RowData>> owned;
    std::mutex insert_mutex;
  };

  explicit ProximityMap(std::size_t node_count) : state_(std::make_unique<State>(node_count)) {}

  std::atomic<const RowData*>& slot(NodeId source) const {
    if (source < 0 || static_cast<std::size_t>(source) >= node_count()) {
      throw ValidationError("node " + std::to_string(source) + " out of range for proximity map");
    }
    return state_->slots[static_cast<std::size_t>(source)];
  }

  const RowData& data(NodeId source) const {
    if (const auto* d = slot(source).load(std::memory_order_acquire)) return *d;
    if (!graph_) throw ValidationError("no proximity row for node " + std::to_string(source));
    auto row = config_.kind == Kernel::shortest_path ? prox_shortest_path(*graph_, source, config_)
                                                     : prox_random_walk(*graph_, source, config_);
    return insert(source, std::move(row));
  }

  const RowData& insert(NodeId source, ProxRow row) const {
    auto d = std::make_unique<RowData>();
    d->entries = std::move(row);
    for (const auto& e : d->entries) d->sum += e.score;
    std::lock_guard lock(state_->insert_mutex);
    auto& s = slot(source);
    if (const auto* existing = s.load(std::memory_order_acquire)) return *existing;
    const RowData* raw = d.get();
    state_->owned.push_back(std::move(d));
    s.store(raw, std::memory_order_release);
    return *raw;
  }

  const Graph* graph_ = nullptr;
  ProximityConfig config_{};
  std::unique_ptr<State> state_;
};

}  // namespace dyntrend
