#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dyntrend/error.hpp"
#include "dyntrend/rng.hpp"
#include "dyntrend/text.hpp"

namespace dyntrend {

using NodeId = std::int32_t;

// ---------------------------------------------------------------------------
// Graph

/// Static sparse network with dense node indices. Adjacency lists are sorted
/// and duplicate free; undirected graphs store both arcs.
class Graph {
 public:
  Graph() = default;

  /// Builds from index pairs. Self loops are dropped, duplicates merged.
  /// `labels` may be empty, in which case node i is labelled "i".
  static Graph from_edges(std::size_t node_count,
                          std::span<const std::pair<NodeId, NodeId>> edges, bool directed,
                          std::vector<std::string> labels = {}) {
    Graph g;
    g.directed_ = directed;
    g.out_.assign(node_count, {});
    g.in_.assign(node_count, {});
    for (const auto& [u, v] : edges) {
      if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= node_count ||
          static_cast<std::size_t>(v) >= node_count) {
        throw ValidationError("edge endpoint out of range: " + std::to_string(u) + " -> " +
                              std::to_string(v));
      }
      if (u == v) continue;
      g.out_[u].push_back(v);
      g.in_[v].push_back(u);
      if (!directed) {
        g.out_[v].push_back(u);
        g.in_[u].push_back(v);
      }
    }
    auto normalize = [](std::vector<std::vector<NodeId>>& lists) {
      for (auto& l : lists) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
      }
    };
    normalize(g.out_);
    normalize(g.in_);

    if (labels.empty()) {
      labels.reserve(node_count);
      for (std::size_t i = 0; i < node_count; ++i) labels.push_back(std::to_string(i));
    }
    if (labels.size() != node_count) throw ValidationError("label count does not match node count");
    g.labels_ = std::move(labels);
    g.index_.reserve(node_count);
    for (std::size_t i = 0; i < node_count; ++i) {
      if (!g.index_.emplace(g.labels_[i], static_cast<NodeId>(i)).second) {
        throw ValidationError("duplicate node label: " + g.labels_[i]);
      }
    }
    return g;
  }

  std::size_t node_count() const noexcept { return out_.size(); }
  bool directed() const noexcept { return directed_; }

  /// Number of stored arcs (an undirected edge counts twice).
  std::size_t arc_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : out_) n += l.size();
    return n;
  }

  std::span<const NodeId> out_neighbors(NodeId u) const { return out_.at(u); }
  std::span<const NodeId> in_neighbors(NodeId u) const { return in_.at(u); }

  bool has_edge(NodeId u, NodeId v) const {
    const auto& l = out_.at(u);
    return std::binary_search(l.begin(), l.end(), v);
  }

  bool valid(NodeId u) const noexcept {
    return u >= 0 && static_cast<std::size_t>(u) < node_count();
  }

  const std::string& label(NodeId u) const { return labels_.at(u); }

  std::optional<NodeId> find(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  bool directed_ = false;
  std::vector<std::vector<NodeId>> out_;
  std::vector<std::vector<NodeId>> in_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
};

/// Reads "src<TAB>dst" lines; '#' lines and blank lines are skipped.
inline Graph parse_graph(std::istream& in, bool directed) {
  std::vector<std::string> labels;
  std::unordered_map<std::string, NodeId> index;
  std::vector<std::pair<NodeId, NodeId>> edges;
  auto intern = [&](std::string_view s) {
    auto [it, inserted] = index.emplace(std::string(s), static_cast<NodeId>(labels.size()));
    if (inserted) labels.emplace_back(s);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = text::split(body, '\t');
    if (fields.size() != 2) {
      throw ParseError("expected \"src<TAB>dst\", got " + std::to_string(fields.size()) +
                           " field(s)",
                       line_no);
    }
    const auto src = text::trim(fields[0]);
    const auto dst = text::trim(fields[1]);
    if (src.empty() || dst.empty()) throw ParseError("empty node label", line_no);
    edges.emplace_back(intern(src), intern(dst));
  }
  if (edges.empty()) throw ValidationError("graph file contains no edges");
  const auto n = labels.size();
  return Graph::from_edges(n, edges, directed, std::move(labels));
}

inline Graph load_graph(const std::string& path, bool directed) {
  auto in = text::open_input(path);
  try {
    return parse_graph(in, directed);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

inline void write_graph(std::ostream& out, const Graph& g) {
  for (NodeId u = 0; static_cast<std::size_t>(u) < g.node_count(); ++u) {
    for (const NodeId v : g.out_neighbors(u)) {
      if (!g.directed() && v < u) continue;
      out << g.label(u) << '\t' << g.label(v) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Trend

struct Action {
  NodeId node = 0;
  double time = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

/// Chronological action sequence. Equal timestamps keep their input order.
class Trend {
 public:
  Trend() = default;

  explicit Trend(std::vector<Action> actions) : actions_(std::move(actions)) {
    std::stable_sort(actions_.begin(), actions_.end(),
                     [](const Action& a, const Action& b) { return a.time < b.time; });
  }

  std::span<const Action> actions() const noexcept { return actions_; }
  std::size_t size() const noexcept { return actions_.size(); }
  bool empty() const noexcept { return actions_.empty(); }
  const Action& operator[](std::size_t i) const { return actions_[i]; }
  auto begin() const noexcept { return actions_.begin(); }
  auto end() const noexcept { return actions_.end(); }

  double first_time() const { return actions_.at(0).time; }
  double last_time() const { return actions_.at(actions_.size() - 1).time; }

  /// Number of actions with time <= t.
  std::size_t count_until(double t) const {
    return static_cast<std::size_t>(
        std::upper_bound(actions_.begin(), actions_.end(), t,
                         [](double x, const Action& a) { return x < a.time; }) -
        actions_.begin());
  }

  friend bool operator==(const Trend&, const Trend&) = default;

 private:
  std::vector<Action> actions_;
};

/// All actions with t_i <= t_star (closed on the right).
inline Trend prefix(const Trend& trend, double t_star) {
  const auto n = trend.count_until(t_star);
  return Trend(std::vector<Action>(trend.begin(), trend.begin() + static_cast<std::ptrdiff_t>(n)));
}

/// Per-node view: the action times of each node, ascending.
inline std::vector<std::vector<double>> times_by_node(const Trend& trend, std::size_t node_count) {
  std::vector<std::vector<double>> out(node_count);
  for (const auto& a : trend) out.at(a.node).push_back(a.time);
  return out;
}

/// Reads "node<TAB>timestamp" lines, resolving labels against `graph`.
inline Trend parse_trend(std::istream& in, const Graph& graph) {
  std::vector<Action> actions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = text::split(body, '\t');
    if (fields.size() != 2) throw ParseError("expected \"node<TAB>timestamp\"", line_no);
    const auto label = text::trim(fields[0]);
    const auto node = graph.find(label);
    if (!node) throw ParseError("unknown node label '" + std::string(label) + "'", line_no);
    const auto t = text::parse_real(fields[1]);
    if (!t) {
      throw ParseError("non-numeric timestamp '" + std::string(text::trim(fields[1])) + "'",
                       line_no);
    }
    actions.push_back({*node, *t});
  }
  return Trend(std::move(actions));
}

inline Trend load_trend(const std::string& path, const Graph& graph) {
  auto in = text::open_input(path);
  try {
    return parse_trend(in, graph);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

inline void write_trend(std::ostream& out, const Trend& trend, const Graph& graph) {
  for (const auto& a : trend) out << graph.label(a.node) << '\t' << text::exact(a.time) << '\n';
}

/// Adds Uniform[0, width) noise to every timestamp, breaking ties between
/// actions recorded at coarse resolution (e.g. per year).
inline Trend jitter(const Trend& trend, double width, std::uint64_t seed) {
  if (!(width >= 0.0)) throw ValidationError("jitter width must be >= 0");
  auto engine = make_engine(seed);
  std::vector<Action> out(trend.begin(), trend.end());
  for (auto& a : out) a.time += width * uniform01(engine);
  return Trend(std::move(out));
}

// ---------------------------------------------------------------------------
// Intervals and aggregates

/// Consecutive equal-length half-open intervals [t_min(i), t_max(i)).
class IntervalGrid {
 public:
  IntervalGrid(double t_start, double length, std::size_t count)
      : t_start_(t_start), length_(length), count_(count) {
    if (!std::isfinite(t_start)) throw ValidationError("grid start must be finite");
    if (!(length > 0.0) || !std::isfinite(length)) throw ValidationError("interval length must be > 0");
    if (count < 1) throw ValidationError("grid needs at least one interval");
  }

  double t_start() const noexcept { return t_start_; }
  double length() const noexcept { return length_; }
  std::size_t count() const noexcept { return count_; }

  double t_min(std::size_t i) const noexcept { return t_start_ + static_cast<double>(i) * length_; }
  double t_max(std::size_t i) const noexcept { return t_min(i + 1); }
  double t_end() const noexcept { return t_min(count_); }

  /// Interval holding t, or nullopt outside [t_start, t_end).
  std::optional<std::size_t> index_of(double t) const noexcept {
    if (t < t_start_ || t >= t_end()) return std::nullopt;
    auto i = static_cast<std::size_t>(std::floor((t - t_start_) / length_));
    if (i >= count_) i = count_ - 1;
    while (i > 0 && t < t_min(i)) --i;
    while (i + 1 < count_ && t >= t_max(i)) ++i;
    return i;
  }

  friend bool operator==(const IntervalGrid&, const IntervalGrid&) = default;

 private:
  double t_start_;
  double length_;
  std::size_t count_;
};

/// Parses "t0:len:count".
inline IntervalGrid parse_grid(std::string_view spec) {
  const auto parts = text::split(spec, ':');
  if (parts.size() != 3) throw ValidationError("grid must look like t0:len:count");
  const auto t0 = text::parse_real(parts[0]);
  const auto len = text::parse_real(parts[1]);
  const auto count = text::parse_int(parts[2]);
  if (!t0 || !len || !count || *count < 1) throw ValidationError("bad grid spec '" + std::string(spec) + "'");
  return IntervalGrid(*t0, *len, static_cast<std::size_t>(*count));
}

enum class Measure { coverage, intensity };

inline Measure parse_measure(std::string_view s) {
  if (s == "coverage") return Measure::coverage;
  if (s == "intensity") return Measure::intensity;
  throw ValidationError("measure must be 'coverage' or 'intensity', got '" + std::string(s) + "'");
}

inline const char* to_string(Measure m) noexcept {
  return m == Measure::coverage ? "coverage" : "intensity";
}

inline void check_interval(double t_min, double t_max) {
  if (!(t_min < t_max)) {
    throw ValidationError("degenerate interval [" + text::real(t_min) + ", " + text::real(t_max) + ")");
  }
}

/// Number of actions with t_min <= t_i < t_max.
inline std::int64_t intensity(const Trend& trend, double t_min, double t_max) {
  check_interval(t_min, t_max);
  std::int64_t n = 0;
  for (const auto& a : trend) n += (a.time >= t_min && a.time < t_max);
  return n;
}

/// Number of distinct nodes acting in [t_min, t_max).
inline std::int64_t coverage(const Trend& trend, double t_min, double t_max) {
  check_interval(t_min, t_max);
  std::vector<NodeId> nodes;
  for (const auto& a : trend) {
    if (a.time >= t_min && a.time < t_max) nodes.push_back(a.node);
  }
  std::sort(nodes.begin(), nodes.end());
  return static_cast<std::int64_t>(std::unique(nodes.begin(), nodes.end()) - nodes.begin());
}

struct AggregateSeries {
  IntervalGrid grid;
  std::vector<std::int64_t> intensity;
  std::vector<std::int64_t> coverage;

  const std::vector<std::int64_t>& values(Measure m) const noexcept {
    return m == Measure::coverage ? coverage : intensity;
  }
};

inline AggregateSeries aggregate(const Trend& trend, const IntervalGrid& grid) {
  AggregateSeries s{grid, std::vector<std::int64_t>(grid.count(), 0),
                    std::vector<std::int64_t>(grid.count(), 0)};
  NodeId max_node = -1;
  for (const auto& a : trend) max_node = std::max(max_node, a.node);
  // last interval each node was counted in, offset by one so 0 means "never"
  std::vector<std::size_t> seen(static_cast<std::size_t>(max_node + 1), 0);
  for (const auto& a : trend) {
    const auto i = grid.index_of(a.time);
    if (!i) continue;
    ++s.intensity[*i];
    auto& mark = seen[static_cast<std::size_t>(a.node)];
    if (mark != *i + 1) {
      // actions are time sorted, so a node's intervals are visited in order
      mark = *i + 1;
      ++s.coverage[*i];
    }
  }
  return s;
}

/// Longest run of consecutive entries strictly greater than theta.
template <typename T>
std::size_t longest_run_above(std::span<const T> values, double theta) {
  std::size_t best = 0;
  std::size_t run = 0;
  for (const auto& v : values) {
    run = static_cast<double>(v) > theta ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

inline std::size_t duration(const AggregateSeries& series, std::int64_t theta, Measure measure) {
  if (theta < 0) throw ValidationError("duration threshold must be >= 0");
  return longest_run_above(std::span<const std::int64_t>(series.values(measure)),
                           static_cast<double>(theta));
}

inline void write_aggregate_csv(std::ostream& out, const AggregateSeries& s) {
  out << "interval_index,t_min,t_max,intensity,coverage\n";
  for (std::size_t i = 0; i < s.grid.count(); ++i) {
    out << i << ',' << text::real(s.grid.t_min(i)) << ',' << text::real(s.grid.t_max(i)) << ','
        << s.intensity[i] << ',' << s.coverage[i] << '\n';
  }
}

}  // namespace dyntrend
