// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cli_helpers.hpp"
#include "dyntrend/dyntrend.hpp"
#include "oracles.hpp"

using namespace dyntrend;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

char buf[512];

template <typename... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double rel(double got, double want) {
  return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Trend random_trend(std::mt19937_64& rng, std::size_t nodes, std::size_t actions, double span) {
  std::uniform_real_distribution<double> t(0.0, span);
  std::vector<Action> a;
  for (std::size_t i = 0; i < actions; ++i) a.push_back({static_cast<NodeId>(rng() % nodes), t(rng)});
  return Trend(a);
}

std::vector<NodeId> actors(const Trend& t) {
  std::vector<NodeId> v;
  for (const auto& a : t) v.push_back(a.node);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

ProximityConfig random_kernel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProximityConfig c;
  if (u(rng) < 0.5) {
    c.b = 0.5 + 2.5 * u(rng);
  } else {
    c.kind = Kernel::random_walk;
    c.p = 0.2 + 0.6 * u(rng);
    c.floor = 1e-6;
  }
  return c;
}

// 1. Toy trend on the yearly grid.
Outcome figure_one() {
  const Graph g = load_graph(DYNTREND_DATA_DIR "/toy/graph.tsv", false);
  const Trend t = load_trend(DYNTREND_DATA_DIR "/toy/actions.tsv", g);
  const auto start = std::chrono::steady_clock::now();
  const auto s = aggregate(t, IntervalGrid(2007, 1, 5));
  const auto di = duration(s, 0, Measure::intensity);
  const auto dc = duration(s, 0, Measure::coverage);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  const bool ok = s.intensity == std::vector<std::int64_t>{1, 5, 4, 2, 0} &&
                  s.coverage == std::vector<std::int64_t>{1, 2, 3, 2, 0} && di == 4 && dc == 4 && ms < 1.0;
  return {ok, fmt("intensity [%lld,%lld,%lld,%lld,%lld] coverage [%lld,%lld,%lld,%lld,%lld] duration %zu/%zu, %.3f ms",
                  (long long)s.intensity[0], (long long)s.intensity[1], (long long)s.intensity[2],
                  (long long)s.intensity[3], (long long)s.intensity[4], (long long)s.coverage[0],
                  (long long)s.coverage[1], (long long)s.coverage[2], (long long)s.coverage[3],
                  (long long)s.coverage[4], di, dc, ms)};
}

// 2. Stacked sum of H and stacked log-likelihood against per-node evaluation.
Outcome stacking() {
  std::mt19937_64 rng(202);
  double worst_h = 0.0, worst_ll = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 20 + rng() % 481;
    const std::size_t acts = 2 + rng() % 199;
    const Graph g = random_graph(n, 1.0 + static_cast<double>(rng() % 40) / 10.0, rng() % 2, rng());
    ProximityMap prox(g, random_kernel(rng));
    const double span = 10.0;
    const Trend t = random_trend(rng, n, acts, span);
    const double tau = std::exp(std::uniform_real_distribution<double>(std::log(0.05), std::log(20.0))(rng));
    const double alpha = 0.1 + static_cast<double>(rng() % 100) / 20.0;
    const auto dense = oracle::dense(prox, actors(t));
    const std::vector<Action> a(t.begin(), t.end());
    worst_h = std::max(worst_h, rel(stacked_H_sum(t, prox, tau, span), oracle::H_sum(a, dense, tau, span)));
    const LikelihoodTerms terms(t, prox, span);
    worst_ll = std::max(worst_ll, rel(terms.log_likelihood(alpha, tau), oracle::log_likelihood(a, dense, alpha, tau, span)));
  }
  return {worst_h <= 1e-9 && worst_ll <= 1e-9,
          fmt("50 instances, max rel err sumH %.2e, logL %.2e (tol 1e-9)", worst_h, worst_ll)};
}

// 3. Closed-form alpha-hat against a golden-section maximizer of log L.
Outcome alpha_stationarity() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 20 + rng() % 200;
    const Graph g = random_graph(n, 3.0, rng() % 2, rng());
    ProximityMap prox(g, random_kernel(rng));
    const Trend t = random_trend(rng, n, 5 + rng() % 150, 8.0);
    const double tau = std::exp(std::uniform_real_distribution<double>(std::log(0.1), std::log(10.0))(rng));
    const double closed = LikelihoodTerms(t, prox, 8.0).alpha_hat(tau);
    const auto dense = oracle::dense(prox, actors(t));
    const std::vector<Action> a(t.begin(), t.end());
    const double numeric = std::exp(oracle::golden_max(
        [&](double la) { return oracle::log_likelihood(a, dense, std::exp(la), tau, 8.0); }, -30.0, 30.0, 1e-10));
    worst = std::max(worst, rel(closed, numeric));
  }
  return {worst <= 1e-6, fmt("20 instances, max rel diff %.2e (tol 1e-6)", worst)};
}

// 4. H against adaptive quadrature of h.
Outcome calculus() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const std::size_t n = 10 + rng() % 40;
    const Graph g = random_graph(n, 3.0, rng() % 2, rng());
    ProximityConfig pc = random_kernel(rng);
    ProximityMap prox(g, pc);
    const Trend t = random_trend(rng, n, 1 + rng() % 30, 5.0);
    DAParams p;
    p.tau = std::exp(std::uniform_real_distribution<double>(std::log(0.1), std::log(10.0))(rng));
    const double at = t.first_time() + std::uniform_real_distribution<double>(0.01, 8.0)(rng);
    const NodeId v = t[rng() % t.size()].node;  // self proximity keeps h > 0
    const ActivenessQuery q{t, prox, p};
    std::vector<double> cuts{t.first_time()};
    for (const auto& a : t)
      if (a.time < at) cuts.push_back(a.time);
    cuts.push_back(at);
    std::sort(cuts.begin(), cuts.end());
    const double scale = H(q, v, at);
    double quad = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k + 1] > cuts[k]) quad += oracle::simpson([&](double s) { return h(q, v, s); }, cuts[k], cuts[k + 1], 1e-13 * scale);
    }
    worst = std::max(worst, rel(scale, quad));
    ++done;
  }
  return {worst <= 1e-6, fmt("100 tuples, max rel diff %.2e (tol 1e-6)", worst)};
}

// 5. Inverse-CDF sampler against its exact law.
Outcome sampler_law() {
  const DecayingStream s{1.0, 0.0, 0};
  std::vector<double> waits;
  std::uint64_t draws = 0, exhausted = 0;
  while (waits.size() < 100000) {
    const auto t = sample_next(s, 1.0, 0.0, counter_uniform(505, 0, draws++));
    if (t) waits.push_back(*t);
    else ++exhausted;
  }
  const double fire = 1.0 - std::exp(-1.0);
  const double ks = oracle::ks_distance(waits, [&](double x) { return (1.0 - std::exp(-(1.0 - std::exp(-x)))) / fire; });
  const double freq = static_cast<double>(exhausted) / static_cast<double>(draws);
  const double off = rel(freq, std::exp(-1.0));
  return {ks < 0.01 && off <= 0.01,
          fmt("KS %.4f (tol 0.01) on 1e5 draws, exhaustion %.5f vs e^-1 %.5f, rel %.2e (tol 1e-2)", ks, freq,
              std::exp(-1.0), off)};
}

// 6. Three streams through the event queue against thinning of the summed rate.
Outcome superposition() {
  const ProximityMap prox = ProximityMap::from_rows(3, {});
  const std::vector<DecayingStream> streams{{20.0, 0.0, 0}, {15.0, 0.5, 1}, {30.0, 1.0, 2}};
  const double tau = 5.0;
  DAParams p{0.0, tau, 0.0, 0.0};
  SimConfig c;
  c.t_start = 0.0;
  c.t_end = 4.0;
  c.seed = 606;
  const IntervalGrid grid(0.0, 1.0, 4);
  const std::size_t runs = 10000;
  std::vector<double> a(4, 0.0), b(4, 0.0);
  for (std::size_t r = 0; r < runs; ++r) {
    const auto run = simulate(streams, prox, p, c, r);
    for (const auto& e : run.actions) a[*grid.index_of(e.time)] += 1.0;
  }
  auto rate = [&](double t) {
    double sum = 0.0;
    for (const auto& s : streams)
      if (t >= s.anchor) sum += s.coefficient * std::exp(-(t - s.anchor) / tau);
    return sum;
  };
  std::mt19937_64 rng(607);
  for (std::size_t r = 0; r < runs; ++r)
    for (const double t : oracle::thinning(rate, 65.0, 0.0, 4.0, rng)) b[*grid.index_of(t)] += 1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, rel(a[i] / runs, b[i] / runs));
  return {worst <= 0.02, fmt("interval means %.3f %.3f %.3f %.3f vs %.3f %.3f %.3f %.3f, max rel %.4f (tol 0.02)",
                             a[0] / runs, a[1] / runs, a[2] / runs, a[3] / runs, b[0] / runs, b[1] / runs,
                             b[2] / runs, b[3] / runs, worst)};
}

// 7. Planted parameters recovered from synthetic trends.
Outcome recovery() {
  std::vector<double> taus, alphas;
  std::size_t fewest = SIZE_MAX;
  for (int s = 0; s < 20; ++s) {
    const Graph g = random_graph(200, 1.0, false, 1000 + s);
    ProximityConfig pc;
    pc.b = 1.0;
    ProximityMap prox(g, pc);
    SynthConfig sc;
    sc.params = {1.5, 2.0, 1e-9, 0.0};
    sc.seed_count = 5;
    sc.horizon = 1e6;
    sc.seed = 1000 + s;
    sc.allow_supercritical = true;
    sc.max_actions = 10000;
    const auto syn = synthesize(g, prox, sc);
    fewest = std::min(fewest, syn.trend.size());
    const auto r = fit(syn.trend, prox, LearnConfig{}, syn.trend.last_time());
    taus.push_back(r.tau_hat);
    alphas.push_back(r.alpha_hat);
  }
  const double mt = median(taus), ma = median(alphas);
  const bool ok = rel(mt, 2.0) <= 0.20 && rel(ma, 1.5) <= 0.15 && fewest >= 300;
  return {ok, fmt("median tau %.4f (planted 2, tol 20%%), median alpha %.4f (planted 1.5, tol 15%%), fewest actions %zu",
                  mt, ma, fewest)};
}

// 8. Stacked objective evaluation against the naive one at |V|=10000, |S|=1000.
Outcome speedup() {
  std::mt19937_64 rng(808);
  const Graph g = random_graph(10000, 5.0, false, 808);
  ProximityMap prox(g, ProximityConfig{});
  const Trend t = random_trend(rng, 10000, 1000, 100.0);
  const auto acting = actors(t);
  prox.precompute(acting);
  const double tau = 3.0, alpha = 0.7, t_star = 100.0;
  using clock = std::chrono::steady_clock;
  double naive_s = 1e300, stacked_s = 1e300, naive_v = 0.0, stacked_v = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    auto a = clock::now();
    naive_v = naive_log_likelihood(t, prox, tau, alpha, t_star);
    auto b = clock::now();
    const LikelihoodTerms terms(t, prox, t_star);
    stacked_v = terms.log_likelihood(alpha, tau);
    auto c = clock::now();
    naive_s = std::min(naive_s, std::chrono::duration<double>(b - a).count());
    stacked_s = std::min(stacked_s, std::chrono::duration<double>(c - b).count());
  }
  const double ratio = naive_s / stacked_s;
  const double diff = rel(stacked_v, naive_v);
  return {ratio >= 10.0 && diff <= 1e-9,
          fmt("naive %.4f s, stacked (setup included) %.6f s, speedup %.0fx (need 10x), values rel %.2e", naive_s,
              stacked_s, ratio, diff)};
}

// 9. Multiple-action factor from proportional series.
Outcome mult_factor() {
  std::mt19937_64 rng(909);
  std::vector<double> cov, inten;
  for (int i = 0; i < 50; ++i) {
    cov.push_back(static_cast<double>(1 + rng() % 500));
    inten.push_back(1.1215 * cov.back());
  }
  const double f = fit_mult_factor(cov, inten);
  return {std::abs(f - 1.1215) <= 1e-9, fmt("fitted %.15f, |diff| %.2e (tol 1e-9)", f, std::abs(f - 1.1215))};
}

// 10. Cascade baselines: deterministic chain and star-graph mean.
Outcome baseline_sanity() {
  std::vector<std::pair<NodeId, NodeId>> ce{{0, 1}, {1, 2}};
  const Graph chain = Graph::from_edges(3, ce, true);
  BaselineParams p;
  p.activation_prob = 1.0;
  p.delay_equal = 1.0;
  SimConfig c;
  c.t_start = 4.0;
  c.t_end = 100.0;
  const auto run = simulate_baseline(p, chain, Trend({{0, 4.0}}), c);
  const bool chain_ok = run.size() == 2 && run[0].node == 1 && run[0].time == 5.0 && run[1].node == 2 && run[1].time == 6.0;

  std::vector<std::pair<NodeId, NodeId>> se;
  for (NodeId i = 1; i <= 100; ++i) se.emplace_back(0, i);
  const Graph star = Graph::from_edges(101, se, true);
  BaselineParams q;
  q.activation_prob = 0.3;
  SimConfig sc;
  sc.t_end = 10.0;
  sc.seed = 1010;
  double total = 0.0;
  const std::size_t runs = 10000;
  for (std::size_t r = 0; r < runs; ++r) total += static_cast<double>(simulate_baseline(q, star, Trend({{0, 0.0}}), sc, r).size());
  const double mean = total / runs;
  const double off = rel(mean, 30.0);
  return {chain_ok && off <= 0.01,
          fmt("chain %s, star mean %.4f vs 30, rel %.4f (tol 0.01)", chain_ok ? "exact" : "WRONG", mean, off)};
}

// 11. The CLI pipeline twice with one seed.
Outcome determinism() {
  const auto a = cli::fresh_dir("acc_a"), b = cli::fresh_dir("acc_b");
  const int ra = cli::pipeline(a, 11), rb = cli::pipeline(b, 11);
  if (ra != 0 || rb != 0) return {false, fmt("pipeline exit codes %d, %d", ra, rb)};
  std::size_t same = 0, total = 0;
  for (const char* f : cli::kPipelineFiles) {
    ++total;
    const auto x = cli::slurp(a / f), y = cli::slurp(b / f);
    same += !x.empty() && x == y;
  }
  return {same == total, fmt("%zu/%zu output files byte-identical", same, total)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {"toy trend aggregation", 1.0, figure_one},
      {"stacking identity", 10.0, stacking},
      {"alpha-hat stationarity", 30.0, alpha_stationarity},
      {"H/h calculus", 10.0, calculus},
      {"sampler law", 30.0, sampler_law},
      {"superposition equivalence", 60.0, superposition},
      {"parameter recovery", 300.0, recovery},
      {"stacked learning speedup", 120.0, speedup},
      {"multiple-action factor", 1.0, mult_factor},
      {"baseline sanity", 60.0, baseline_sanity},
      {"end-to-end determinism", 60.0, determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= all[i].limit_s;
    const bool ok = o.ok && in_time;
    failed += !ok;
    std::printf("%s criterion %zu (%s): %s [%.2f s, limit %.0f s%s]\n", ok ? "PASS" : "FAIL", i + 1, all[i].name,
                o.detail.c_str(), secs, all[i].limit_s, in_time ? "" : ", OVER");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, all.size());
  return failed ? 1 : 0;
}
