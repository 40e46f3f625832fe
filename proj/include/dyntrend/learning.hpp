#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dyntrend/activeness.hpp"
#include "dyntrend/core_data.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/proximity.hpp"

namespace dyntrend {

struct LearnConfig {
  // Search range for tau. Zero means "derive from the observation span":
  // [1e-3, 1e3] times (t_star - first action time).
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  double tolerance = 1e-6;  // relative width at which a golden-section start stops
  std::size_t multistart_count = 4;
  double seed_rate = 1e-9;  // stands in for h at actions with no prior influence

  void validate() const {
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw ValidationError("tolerance must be in (0,1)");
    if (multistart_count < 1) throw ValidationError("multistart_count must be >= 1");
    if (tau_lo != 0.0 || tau_hi != 0.0) {
      if (!(tau_lo > 0.0 && tau_lo < tau_hi)) throw ValidationError("need 0 < tau_lo < tau_hi");
    }
    if (!(seed_rate >= 0.0)) throw ValidationError("seed_rate must be >= 0");
  }
};

struct LearnResult {
  double alpha_hat = 0.0;
  double tau_hat = 0.0;
  double log_likelihood = 0.0;
  std::size_t evaluations = 0;
  double tau_lo = 0.0;  // range actually searched
  double tau_hi = 0.0;
};

/// The tau-independent parts of the log-likelihood of a prefix, gathered once
/// so that each objective evaluation costs O(sum of row sizes) instead of
/// O(|V| * |S|).
///
/// For action i the density term uses strict predecessors only (j < i in
/// sequence order), so an action never explains itself. Per-node influence is
/// carried forward recursively: between updates it only decays.
class LikelihoodTerms {
 public:
  LikelihoodTerms(const Trend& trend, const ProximityMap& prox, double t_star, double seed_rate = 1e-9)
      : seed_rate_(seed_rate) {
    const Trend observed = prefix(trend, t_star);
    const std::size_t n = observed.size();
    std::unordered_map<NodeId, std::uint32_t> compact;
    auto id = [&](NodeId v) {
      return compact.emplace(v, static_cast<std::uint32_t>(compact.size())).first->second;
    };
    times_.reserve(n);
    elapsed_.reserve(n);
    row_sums_.reserve(n);
    actor_.reserve(n);
    offsets_.reserve(n + 1);
    offsets_.push_back(0);
    for (const auto& a : observed) {
      times_.push_back(a.time);
      elapsed_.push_back(t_star - a.time);
      actor_.push_back(id(a.node));
      for (const auto& e : prox.row(a.node)) reach_.push_back({id(e.node), e.score});
      offsets_.push_back(reach_.size());
      row_sums_.push_back(prox.row_sum(a.node));
    }
    node_slots_ = compact.size();
  }

  std::size_t action_count() const noexcept { return elapsed_.size(); }

  /// Sum over all nodes of H_v(t_star, tau), via per-action row sums.
  double H_sum(double tau) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < elapsed_.size(); ++i) sum += decayed_fraction(elapsed_[i], tau) * row_sums_[i];
    return tau * sum;
  }

  /// Sum over actions of log h_{v_i}(t_i, tau).
  double log_h_sum(double tau) const {
    std::vector<double> level(node_slots_, 0.0);
    std::vector<double> stamp(node_slots_, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
      const double t = times_[i];
      const std::uint32_t self = actor_[i];
      double h = level[self] == 0.0 ? 0.0 : level[self] * decay(t - stamp[self], tau);
      if (h == 0.0) h = seed_rate_;
      if (h == 0.0) {
        throw ComputeError("action " + std::to_string(i) + " has no prior influence and the seed rate is zero");
      }
      total += std::log(h);
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
        const auto [w, s] = reach_[k];
        level[w] = (level[w] == 0.0 ? 0.0 : level[w] * decay(t - stamp[w], tau)) + s;
        stamp[w] = t;
      }
    }
    return total;
  }

  double log_likelihood(double alpha, double tau) const {
    const double n = static_cast<double>(action_count());
    return n * std::log(alpha) - alpha * H_sum(tau) + log_h_sum(tau);
  }

  /// Closed-form maximizer over alpha at fixed tau: |S| / sum_v H_v.
  double alpha_hat(double tau) const { return static_cast<double>(action_count()) / alpha_denominator(tau); }

  /// log L with alpha profiled out: |S| log(|S| / sum H) - |S| + sum log h.
  double profile(double tau) const {
    const double n = static_cast<double>(action_count());
    return n * std::log(n / alpha_denominator(tau)) - n + log_h_sum(tau);
  }

 private:
  struct Reach {
    std::uint32_t node;
    double score;
  };

  double alpha_denominator(double tau) const {
    const double denom = H_sum(tau);
    if (!(denom > 0.0)) {
      throw ValidationError("degenerate prefix: integrated influence is zero (all actions at t_star?)");
    }
    return denom;
  }

  double seed_rate_;
  std::size_t node_slots_ = 0;
  std::vector<double> times_;
  std::vector<double> elapsed_;
  std::vector<double> row_sums_;
  std::vector<std::uint32_t> actor_;
  std::vector<std::size_t> offsets_;
  std::vector<Reach> reach_;
};

inline double log_likelihood(const Trend& trend, const ProximityMap& prox, double tau, double alpha,
                             double t_star, double seed_rate = 1e-9) {
  if (!(tau > 0.0) || !(alpha > 0.0)) throw ValidationError("tau and alpha must be > 0");
  return LikelihoodTerms(trend, prox, t_star, seed_rate).log_likelihood(alpha, tau);
}

/// Direct evaluation: H summed node by node and h re-derived per action.
/// O(|V| * |S| + |S|^2); kept as the reference for the stacked path.
inline double naive_log_likelihood(const Trend& trend, const ProximityMap& prox, double tau, double alpha,
                                   double t_star, double seed_rate = 1e-9) {
  const Trend observed = prefix(trend, t_star);
  double log_h = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      h += prox.score(observed[j].node, observed[i].node) * decay(observed[i].time - observed[j].time, tau);
    }
    if (h == 0.0) h = seed_rate;
    if (h == 0.0) throw ComputeError("action without prior influence and zero seed rate");
    log_h += std::log(h);
  }
  const double n = static_cast<double>(observed.size());
  return n * std::log(alpha) - alpha * naive_H_sum(observed, prox, tau, t_star) + log_h;
}

inline double alpha_hat(const Trend& trend, const ProximityMap& prox, double tau, double t_star) {
  return LikelihoodTerms(trend, prox, t_star).alpha_hat(tau);
}

/// Upper bound on objective evaluations for one golden-section start over a
/// log-width `log_width` stopped at log-width `log_tol`.
inline std::size_t golden_evaluation_bound(double log_width, double log_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double steps = std::ceil(std::log(log_width / log_tol) / std::log(1.0 / inv_phi));
  return static_cast<std::size_t>(std::max(0.0, steps)) + 2;
}

/// Maximum-likelihood (alpha, tau). tau maximizes the profile objective by
/// golden-section search on log tau, run independently on `multistart_count`
/// geometric slices of the range; alpha follows in closed form.
inline LearnResult fit(const Trend& trend, const ProximityMap& prox, const LearnConfig& config, double t_star) {
  config.validate();
  const LikelihoodTerms terms(trend, prox, t_star, config.seed_rate);
  if (terms.action_count() < 2) {
    throw ValidationError("need at least 2 observed actions to learn, got " +
                          std::to_string(terms.action_count()));
  }
  const Trend observed = prefix(trend, t_star);
  double lo = config.tau_lo;
  double hi = config.tau_hi;
  if (lo == 0.0 && hi == 0.0) {
    const double span = t_star - observed.first_time();
    if (!(span > 0.0)) throw ValidationError("degenerate prefix: every action is at t_star");
    lo = 1e-3 * span;
    hi = 1e3 * span;
  }
  if (!(terms.H_sum(hi) > 0.0)) throw ValidationError("degenerate prefix: integrated influence is zero");

  LearnResult best;
  best.tau_lo = lo;
  best.tau_hi = hi;
  double best_value = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  auto objective = [&](double log_tau) {
    const double tau = std::exp(log_tau);
    const double v = terms.profile(tau);
    ++evaluations;
    if (v > best_value || (v == best_value && tau < best.tau_hat)) {
      best_value = v;
      best.tau_hat = tau;
    }
    return v;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double log_lo = std::log(lo);
  const double slice = (std::log(hi) - log_lo) / static_cast<double>(config.multistart_count);
  const double log_tol = std::log1p(config.tolerance);
  for (std::size_t k = 0; k < config.multistart_count; ++k) {
    double a = log_lo + slice * static_cast<double>(k);
    double b = a + slice;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > log_tol) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = objective(d);
      }
    }
  }

  best.alpha_hat = terms.alpha_hat(best.tau_hat);
  best.log_likelihood = terms.log_likelihood(best.alpha_hat, best.tau_hat);
  best.evaluations = evaluations;
  return best;
}

}  // namespace dyntrend
