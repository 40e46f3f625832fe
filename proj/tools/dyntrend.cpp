// dyntrend: learn, forecast and evaluate trends on social networks.
//
// Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dyntrend/dyntrend.hpp"

namespace fs = std::filesystem;
using namespace dyntrend;

namespace {

struct GraphOptions {
  std::string graph;
  bool directed = false;
};

struct ProxOptions {
  std::string kind = "sp";
  double b = 10.0;
  double p = 0.4;
  double floor = 1e-12;
  std::string cache;

  ProximityConfig config() const {
    ProximityConfig c;
    c.kind = parse_kernel(kind);
    c.b = b;
    c.p = p;
    c.floor = floor;
    c.validate();
    return c;
  }
};

void add_graph_options(CLI::App* cmd, GraphOptions& g, bool required = true) {
  auto* opt = cmd->add_option("--graph", g.graph, "edge file, one \"src<TAB>dst\" per line");
  if (required) opt->required();
  cmd->add_flag("--directed", g.directed, "treat edges as directed (src influences dst)");
}

void add_prox_options(CLI::App* cmd, ProxOptions& p) {
  cmd->add_option("--prox", p.kind, "proximity kernel: sp (shortest path) or rw (random walk)")
      ->check(CLI::IsMember({"sp", "rw"}));
  cmd->add_option("--b", p.b, "shortest-path decay per hop");
  cmd->add_option("--p", p.p, "random-walk restart probability");
  cmd->add_option("--floor", p.floor, "drop proximity scores below this value");
  cmd->add_option("--prox-cache", p.cache, "proximity cache written by prox-cache");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (std::getenv("DYNTREND_TEST_MODE")) throw ValidationError("--seed is required in test mode");
  const auto now = static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
  std::cerr << "dyntrend: no --seed given, using " << now << '\n';
  return now;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  auto out = text::open_output(path);
  out << content;
  if (!out) throw ValidationError("failed writing " + path);
}

void load_cache_if_any(ProximityMap& prox, const std::string& path) {
  if (path.empty()) return;
  auto in = text::open_input(path);
  prox.load(in);
}

Trend read_actions(const std::string& path, const Graph& g, double jitter_width,
                   const std::optional<std::uint64_t>& seed) {
  Trend t = load_trend(path, g);
  if (jitter_width > 0.0) t = jitter(t, jitter_width, resolve_seed(seed));
  return t;
}

// --- aggregate -------------------------------------------------------------

struct AggregateCmd {
  GraphOptions graph;
  std::string actions, grid, out;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("aggregate", "per-interval intensity and coverage of an action file");
    add_graph_options(c, graph);
    c->add_option("--actions", actions, "action file, one \"node<TAB>timestamp\" per line")->required();
    c->add_option("--grid", grid, "intervals as t0:len:count")->required();
    c->add_option("--out", out, "output CSV (default stdout)");
    c->callback([this] { run(); });
  }

  void run() const {
    const Graph g = load_graph(graph.graph, graph.directed);
    const Trend t = load_trend(actions, g);
    std::ostringstream os;
    write_aggregate_csv(os, aggregate(t, parse_grid(grid)));
    emit(out, os.str());
  }
};

// --- prox-cache ------------------------------------------------------------

struct ProxCacheCmd {
  GraphOptions graph;
  ProxOptions prox;
  std::string actions, out;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("prox-cache", "precompute proximity rows and write a cache file");
    add_graph_options(c, graph);
    add_prox_options(c, prox);
    c->add_option("--actions", actions, "only compute rows for nodes acting in this file");
    c->add_option("--out", out, "cache file")->required();
    c->callback([this] { run(); });
  }

  void run() const {
    const Graph g = load_graph(graph.graph, graph.directed);
    ProximityMap map(g, prox.config());
    load_cache_if_any(map, prox.cache);
    if (actions.empty()) {
      map.precompute_all();
    } else {
      for (const auto& a : load_trend(actions, g)) (void)map.row(a.node);
    }
    std::ostringstream os;
    map.save(os);
    emit(out, os.str());
  }
};

// --- learn -----------------------------------------------------------------

struct LearnCmd {
  GraphOptions graph;
  ProxOptions prox;
  std::string actions, out, report;
  double t_star = 0.0;
  std::optional<double> t0;
  double epsilon = 1e-9;
  double tau_lo = 0.0, tau_hi = 0.0, tolerance = 1e-6;
  std::size_t multistart = 4;
  double jitter_width = 0.0;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("learn", "fit alpha and tau by maximum likelihood on the prefix up to t*");
    add_graph_options(c, graph);
    add_prox_options(c, prox);
    c->add_option("--actions", actions, "action file")->required();
    c->add_option("--t-star", t_star, "end of the observed prefix")->required();
    c->add_option("--t0", t0, "trend start time (default: first observed action)");
    c->add_option("--epsilon", epsilon, "baseline activeness, also the likelihood seed rate");
    c->add_option("--tau-lo", tau_lo, "lower end of the tau search range");
    c->add_option("--tau-hi", tau_hi, "upper end of the tau search range");
    c->add_option("--tolerance", tolerance, "relative tolerance of the line search");
    c->add_option("--multistart", multistart, "number of line-search starts");
    c->add_option("--jitter", jitter_width, "add Uniform[0,w) noise to timestamps (needs --seed)");
    c->add_option("--seed", seed, "random seed (used by --jitter)");
    c->add_option("--out", out, "parameter file (JSON)")->required();
    c->add_option("--report", report, "sidecar CSV: alpha,tau,logL,evaluations");
    c->callback([this] { run(); });
  }

  void run() const {
    const Graph g = load_graph(graph.graph, graph.directed);
    const Trend trend = read_actions(actions, g, jitter_width, seed);
    const Trend observed = prefix(trend, t_star);
    ProximityMap map(g, prox.config());
    load_cache_if_any(map, prox.cache);

    LearnConfig cfg;
    cfg.tau_lo = tau_lo;
    cfg.tau_hi = tau_hi;
    cfg.tolerance = tolerance;
    cfg.multistart_count = multistart;
    cfg.seed_rate = epsilon;
    LearnResult result;
    try {
      result = fit(observed, map, cfg, t_star);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("learning stage: ") + e.what());
    }

    ModelFile model;
    model.params.alpha = result.alpha_hat;
    model.params.tau = result.tau_hat;
    model.params.epsilon = epsilon;
    model.params.t0 = t0.value_or(observed.first_time());
    model.proximity = map.config();
    std::ostringstream os;
    write_model(os, model);
    emit(out, os.str());
    if (!report.empty()) {
      std::ostringstream rs;
      rs << "alpha,tau,logL,evaluations\n"
         << text::exact(result.alpha_hat) << ',' << text::exact(result.tau_hat) << ','
         << text::exact(result.log_likelihood) << ',' << result.evaluations << '\n';
      emit(report, rs.str());
    }
  }
};

// --- predict ---------------------------------------------------------------

struct PredictCmd {
  GraphOptions graph;
  std::string prox_cache;
  std::string actions, grid, params, model = "da", measure = "coverage", theta = "0", out, dump_runs;
  double t_star = 0.0;
  bool mult = false;
  std::optional<double> mult_factor;
  std::size_t runs = 100, max_events = 10'000'000, threads = 0;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("predict", "Monte Carlo forecast of intensity, coverage and duration");
    add_graph_options(c, graph);
    c->add_option("--actions", actions, "action file")->required();
    c->add_option("--t-star", t_star, "end of the observed prefix")->required();
    c->add_option("--grid", grid, "prediction intervals t0:len:count, t0 must equal t*")->required();
    c->add_option("--model", model, "da, tequ, texp or eexp")->check(CLI::IsMember({"da", "tequ", "texp", "eexp"}));
    c->add_option("--params", params, "parameter file from learn (required for da)");
    c->add_option("--prox-cache", prox_cache, "proximity cache matching the parameter file");
    c->add_flag("--mult", mult, "cascade models: intensity = factor * coverage");
    c->add_option("--mult-factor", mult_factor, "fixed multiple-action factor (default: fit on training intervals)");
    c->add_option("--runs", runs, "Monte Carlo runs");
    c->add_option("--seed", seed, "random seed");
    c->add_option("--theta", theta, "duration threshold, or 'last' for the last training interval's value");
    c->add_option("--measure", measure, "duration measure: coverage or intensity")
        ->check(CLI::IsMember({"coverage", "intensity"}));
    c->add_option("--max-events", max_events, "abort a run after this many events");
    c->add_option("--threads", threads, "worker threads (0 = all cores)");
    c->add_option("--out", out, "prediction CSV (default stdout)");
    c->add_option("--dump-runs", dump_runs, "directory for per-run action files");
    c->callback([this] { run(); });
  }

  void run() const {
    const Graph g = load_graph(graph.graph, graph.directed);
    const Trend trend = load_trend(actions, g);
    const IntervalGrid pred_grid = parse_grid(grid);
    const double scale = std::max(1.0, std::abs(t_star));
    if (std::abs(pred_grid.t_start() - t_star) > 1e-9 * scale) {
      throw ValidationError("prediction grid must start at t* (" + text::real(t_star) + "), got " +
                            text::real(pred_grid.t_start()));
    }
    if (mult && model == "da") throw ValidationError("--mult applies to cascade models only");
    const Trend observed = prefix(trend, t_star);
    const Measure m = parse_measure(measure);

    double threshold = 0.0;
    if (theta == "last") {
      threshold = static_cast<double>(
          threshold_from_last_observed(observed, training_grid(observed, t_star, pred_grid.length()), m));
    } else {
      const auto v = text::parse_real(theta);
      if (!v || *v < 0.0) throw ValidationError("--theta must be a number >= 0 or 'last'");
      threshold = *v;
    }

    SimConfig sim;
    sim.t_start = t_star;
    sim.t_end = pred_grid.t_end();
    sim.runs = runs;
    sim.seed = resolve_seed(seed);
    sim.max_events = max_events;
    sim.threads = threads;
    if (runs == 0) throw ValidationError("--runs must be >= 1");

    std::vector<Trend> kept;
    std::vector<Trend>* keep = dump_runs.empty() ? nullptr : &kept;
    PredictionReport report;
    if (model == "da") {
      if (params.empty()) throw ValidationError("--params is required for the da model");
      auto in = text::open_input(params);
      const ModelFile mf = read_model(in);
      ProximityMap map(g, mf.proximity);
      load_cache_if_any(map, prox_cache);
      report = predict(observed, map, mf.params, sim, pred_grid, threshold, m, keep);
    } else {
      auto bp = fit_baseline(parse_baseline(model), observed, g, t_star);
      if (mult) {
        bp.mult_factor = mult_factor ? *mult_factor
                                     : fit_mult_factor(observed, training_grid(observed, t_star, pred_grid.length()));
      }
      report = predict_baseline(bp, g, observed, sim, pred_grid, threshold, m, mult, keep);
    }

    std::ostringstream os;
    write_prediction_csv(os, report);
    emit(out, os.str());
    if (keep) {
      fs::create_directories(dump_runs);
      for (std::size_t r = 0; r < kept.size(); ++r) {
        std::ostringstream ts;
        write_trend(ts, kept[r], g);
        emit((fs::path(dump_runs) / ("run_" + std::to_string(r) + ".tsv")).string(), ts.str());
      }
    }
  }
};

// --- eval ------------------------------------------------------------------

struct EvalCmd {
  GraphOptions graph;
  std::string pred, actions, manifest, out;
  std::optional<double> theta;
  std::optional<std::string> measure;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "error ratios and duration flags of predictions against the truth");
    add_graph_options(c, graph);
    c->add_option("--pred", pred, "prediction CSV from predict");
    c->add_option("--actions", actions, "true action file");
    c->add_option("--manifest", manifest, "CSV with header pred,actions listing several trends");
    c->add_option("--theta", theta, "duration threshold (default: the one recorded in the prediction)");
    c->add_option("--measure", measure, "duration measure (default: the one recorded in the prediction)");
    c->add_option("--out", out, "output CSV (default stdout)");
    c->callback([this] { run(); });
  }

  struct TrendEval {
    PredictionReport report;
    AggregateSeries truth;
    bool flag_predicted;
    bool flag_true;
    double theta;
    Measure measure;
  };

  TrendEval evaluate(const Graph& g, const std::string& pred_path, const std::string& actions_path) const {
    auto in = text::open_input(pred_path);
    PredictionReport r = read_prediction_csv(in);
    const Trend t = load_trend(actions_path, g);
    const double th = theta.value_or(r.theta);
    const Measure m = measure ? parse_measure(*measure) : r.measure;
    auto truth = aggregate(t, r.grid);
    const bool flag_true = longest_run_above(std::span<const std::int64_t>(truth.values(m)), th) == r.grid.count();
    // the recorded fraction is only meaningful under the recorded threshold and measure
    bool flag_pred;
    if (th == r.theta && m == r.measure) {
      flag_pred = duration_vote(r.duration_fraction);
    } else {
      flag_pred = longest_run_above(std::span<const double>(r.mean(m)), th) == r.grid.count();
    }
    return {std::move(r), std::move(truth), flag_pred, flag_true, th, m};
  }

  static void rows(std::ostream& os, const TrendEval& e, const std::string& trend_label) {
    for (const Measure m : {Measure::intensity, Measure::coverage}) {
      for (std::size_t i = 0; i < e.report.grid.count(); ++i) {
        const double truth = static_cast<double>(e.truth.values(m)[i]);
        const double prediction = e.report.mean(m)[i];
        const auto er = error_ratio(truth, prediction);
        if (!trend_label.empty()) os << trend_label << ',';
        os << i << ',' << to_string(m) << ',' << text::real(truth) << ',' << text::real(prediction) << ','
           << (er ? text::real(*er) : "NA") << '\n';
      }
    }
  }

  void run() const {
    if (manifest.empty() == pred.empty()) throw ValidationError("give either --pred/--actions or --manifest");
    const Graph g = load_graph(graph.graph, graph.directed);
    std::ostringstream os;
    if (!pred.empty()) {
      if (actions.empty()) throw ValidationError("--actions is required with --pred");
      const auto e = evaluate(g, pred, actions);
      os << "interval_index,measure,truth,prediction,error_ratio\n";
      rows(os, e, "");
      os << "# duration_flag_predicted=" << e.flag_predicted << ",duration_flag_true=" << e.flag_true
         << ",theta=" << text::real(e.theta) << ",measure=" << to_string(e.measure) << '\n';
      emit(out, os.str());
      return;
    }

    auto in = text::open_input(manifest);
    const fs::path base = fs::path(manifest).parent_path();
    std::vector<std::pair<std::string, TrendEval>> evals;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto body = text::trim(line);
      if (body.empty() || body.front() == '#') continue;
      if (line_no == 1 && body == "pred,actions") continue;
      const auto f = text::split(body, ',');
      if (f.size() != 2) throw ParseError("manifest rows are pred,actions", line_no);
      auto resolve = [&](std::string_view p) {
        fs::path path{std::string(text::trim(p))};
        return (path.is_relative() ? base / path : path).string();
      };
      evals.emplace_back(std::string(text::trim(f[0])), evaluate(g, resolve(f[0]), resolve(f[1])));
    }
    if (evals.empty()) throw ValidationError("manifest lists no trends");

    os << "trend,interval_index,measure,truth,prediction,error_ratio\n";
    for (const auto& [label, e] : evals) rows(os, e, label);

    // mean error ratio per interval over trends, skipping zero-truth intervals
    const std::size_t count = evals.front().second.report.grid.count();
    for (const Measure m : {Measure::intensity, Measure::coverage}) {
      for (std::size_t i = 0; i < count; ++i) {
        double sum = 0.0;
        std::size_t used = 0;
        for (const auto& [label, e] : evals) {
          if (i >= e.report.grid.count()) continue;
          if (const auto er = error_ratio(static_cast<double>(e.truth.values(m)[i]), e.report.mean(m)[i])) {
            sum += *er;
            ++used;
          }
        }
        os << "# mean_error_ratio," << to_string(m) << ',' << i << ','
           << (used ? text::real(sum / static_cast<double>(used)) : "NA") << ',' << used << '\n';
      }
    }
    std::vector<std::pair<bool, bool>> flags;
    for (const auto& [label, e] : evals) {
      os << "# duration," << label << ",predicted=" << e.flag_predicted << ",true=" << e.flag_true << '\n';
      flags.emplace_back(e.flag_predicted, e.flag_true);
    }
    os << "# duration_accuracy=" << text::real(duration_accuracy(flags)) << '\n';
    emit(out, os.str());
  }
};

// --- synth -----------------------------------------------------------------

struct SynthCmd {
  GraphOptions graph;
  ProxOptions prox;
  std::string random, graph_out, out, manifest_out;
  double alpha = 0.5, tau = 1.0, epsilon = 1e-9, t0 = 0.0, horizon = 10.0;
  std::size_t seeds = 5, max_actions = 0, max_events = 10'000'000;
  bool allow_supercritical = false;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("synth", "generate a synthetic trend from planted parameters");
    add_graph_options(c, graph, false);
    add_prox_options(c, prox);
    c->add_option("--random", random, "random graph n:mean_degree instead of --graph (isolated nodes are dropped)");
    c->add_option("--graph-out", graph_out, "write the (random) graph's edge file here");
    c->add_option("--alpha", alpha, "planted propagation ratio");
    c->add_option("--tau", tau, "planted mean lifetime");
    c->add_option("--epsilon", epsilon, "planted baseline activeness");
    c->add_option("--t0", t0, "start time; seeds act here");
    c->add_option("--seeds", seeds, "number of seed actions");
    c->add_option("--horizon", horizon, "generate on [t0, horizon)");
    c->add_option("--seed", seed, "random seed");
    c->add_option("--max-actions", max_actions, "stop after this many actions, seeds included");
    c->add_option("--max-events", max_events, "explosion guard");
    c->add_flag("--allow-supercritical", allow_supercritical, "permit alpha*tau*max row sum >= 1 (needs --max-actions)");
    c->add_option("--out", out, "action file (default stdout)");
    c->add_option("--manifest-out", manifest_out, "JSON record of the planted parameters");
    c->callback([this] { run(); });
  }

  void run() const {
    if (graph.graph.empty() == random.empty()) throw ValidationError("give exactly one of --graph or --random");
    const std::uint64_t s = resolve_seed(seed);
    Graph g;
    if (!random.empty()) {
      const auto parts = text::split(random, ':');
      const auto n = parts.size() == 2 ? text::parse_int(parts[0]) : std::nullopt;
      const auto d = parts.size() == 2 ? text::parse_real(parts[1]) : std::nullopt;
      if (!n || !d || *n < 2) throw ValidationError("--random must look like n:mean_degree");
      g = drop_isolated(random_graph(static_cast<std::size_t>(*n), *d, graph.directed, derive_seed(s, 0x67)));
      if (g.node_count() < 2) throw ValidationError("random graph has no edges; raise the mean degree");
    } else {
      g = load_graph(graph.graph, graph.directed);
    }
    if (!graph_out.empty()) {
      std::ostringstream gs;
      write_graph(gs, g);
      emit(graph_out, gs.str());
    }
    ProximityMap map(g, prox.config());
    load_cache_if_any(map, prox.cache);

    SynthConfig cfg;
    cfg.params = {alpha, tau, epsilon, t0};
    cfg.seed_count = seeds;
    cfg.horizon = horizon;
    cfg.seed = s;
    cfg.max_actions = max_actions;
    cfg.allow_supercritical = allow_supercritical;
    cfg.max_events = max_events;
    const auto result = synthesize(g, map, cfg);

    std::ostringstream os;
    write_trend(os, result.trend, g);
    emit(out, os.str());
    if (!manifest_out.empty()) {
      nlohmann::json j = to_json(ModelFile{cfg.params, map.config()});
      j["seed"] = s;
      j["seed_count"] = seeds;
      j["horizon"] = horizon;
      j["actions"] = result.trend.size();
      j["truncated"] = result.truncated;
      j["last_time"] = result.trend.empty() ? t0 : result.trend.last_time();
      j["branching_bound"] = result.branching_bound;
      j["empirical_branching"] = result.empirical_branching ? nlohmann::json(*result.empirical_branching)
                                                            : nlohmann::json(nullptr);
      std::vector<std::string> labels;
      for (const NodeId v : result.seeds) labels.push_back(g.label(v));
      j["seed_nodes"] = labels;
      emit(manifest_out, j.dump(2) + "\n");
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyntrend: dynamic-activeness trend forecasting on social networks"};
  app.require_subcommand(1);

  AggregateCmd aggregate_cmd;
  ProxCacheCmd prox_cmd;
  LearnCmd learn_cmd;
  PredictCmd predict_cmd;
  EvalCmd eval_cmd;
  SynthCmd synth_cmd;
  aggregate_cmd.attach(app);
  prox_cmd.attach(app);
  learn_cmd.attach(app);
  predict_cmd.attach(app);
  eval_cmd.attach(app);
  synth_cmd.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "dyntrend: invalid input: " << e.what() << '\n';
    return 1;
  } catch (const ExplosionError& e) {
    std::cerr << "dyntrend: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dyntrend: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
