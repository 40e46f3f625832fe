#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/proximity.hpp"

namespace dyntrend {

/// Per-trend model parameters.
struct DAParams {
  double alpha = 1.0;     // propagation ratio: activeness jump per unit proximity
  double tau = 1.0;       // mean lifetime of the exponential decay
  double epsilon = 1e-9;  // baseline activeness of every node at t0
  double t0 = 0.0;        // trend start

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be >= 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be > 0");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be >= 0");
    if (!std::isfinite(t0)) throw ValidationError("t0 must be finite");
  }
};

/// exp(-elapsed / tau), flushed to zero once the exponent passes 700.
inline double decay(double elapsed, double tau) noexcept {
  const double x = elapsed / tau;
  return x > 700.0 ? 0.0 : std::exp(-x);
}

/// 1 - exp(-elapsed / tau) without cancellation for short elapsed times.
inline double decayed_fraction(double elapsed, double tau) noexcept {
  const double x = elapsed / tau;
  return x > 700.0 ? 1.0 : -std::expm1(-x);
}

struct ActivenessQuery {
  const Trend& prefix;
  const ProximityMap& proximity;
  DAParams params;
};

/// Sum over actions with t_i <= t of prox(v_i, v) * exp(-(t - t_i) / tau).
inline double influence(const Trend& prefix, const ProximityMap& prox, NodeId v, double t, double tau) {
  double sum = 0.0;
  for (const auto& a : prefix) {
    if (a.time > t) break;
    const double s = prox.score(a.node, v);
    if (s != 0.0) sum += s * decay(t - a.time, tau);
  }
  return sum;
}

/// Integral of `influence` from each action's time up to t.
inline double integrated_influence(const Trend& prefix, const ProximityMap& prox, NodeId v, double t,
                                   double tau) {
  double sum = 0.0;
  for (const auto& a : prefix) {
    if (a.time > t) break;
    const double s = prox.score(a.node, v);
    if (s != 0.0) sum += s * decayed_fraction(t - a.time, tau);
  }
  return tau * sum;
}

inline double h(const ActivenessQuery& q, NodeId v, double t) {
  return influence(q.prefix, q.proximity, v, t, q.params.tau);
}

inline double H(const ActivenessQuery& q, NodeId v, double t) {
  return integrated_influence(q.prefix, q.proximity, v, t, q.params.tau);
}

/// r_v(t) = alpha * h_v(t) + epsilon * exp(-(t - t0) / tau).
inline double activeness(const ActivenessQuery& q, NodeId v, double t) {
  return q.params.alpha * h(q, v, t) + q.params.epsilon * decay(t - q.params.t0, q.params.tau);
}

/// Sum of H_v(t_star) over every node, regrouped per action:
/// tau * sum_i (1 - exp(-(t_star - t_i) / tau)) * rowsum(v_i).
/// `row_sums[i]` belongs to the i-th action of the prefix.
inline double stacked_H_sum(std::span<const Action> actions, std::span<const double> row_sums,
                            double tau, double t_star) {
  if (row_sums.size() != actions.size()) throw ValidationError("one row sum per action required");
  double sum = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].time > t_star) break;
    sum += decayed_fraction(t_star - actions[i].time, tau) * row_sums[i];
  }
  return tau * sum;
}

/// Same identity, reading row sums from the map. Rows must already be present.
inline double stacked_H_sum(const Trend& prefix, const ProximityMap& prox, double tau, double t_star) {
  std::vector<double> sums;
  sums.reserve(prefix.size());
  for (const auto& a : prefix) sums.push_back(prox.row_sum(a.node));
  return stacked_H_sum(prefix.actions(), sums, tau, t_star);
}

/// Sum of H_v(t_star) node by node, O(|V| * |S|). Reference for the stacked form.
inline double naive_H_sum(const Trend& prefix, const ProximityMap& prox, double tau, double t_star) {
  double sum = 0.0;
  for (NodeId v = 0; static_cast<std::size_t>(v) < prox.node_count(); ++v) {
    sum += integrated_influence(prefix, prox, v, t_star, tau);
  }
  return sum;
}

}  // namespace dyntrend
