#include <gtest/gtest.h>

#include <cmath>

#include "dyntrend/dyntrend.hpp"

using namespace dyntrend;

namespace {

Graph chain(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(i + 1));
  return Graph::from_edges(n, e, true);
}

Graph star(std::size_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (std::size_t i = 1; i <= leaves; ++i) e.emplace_back(0, static_cast<NodeId>(i));
  return Graph::from_edges(leaves + 1, e, true);
}

}  // namespace

TEST(Fit, ChainDelays) {
  const Graph g = chain(3);
  const Trend t({{0, 0.0}, {1, 1.0}, {2, 2.0}});
  const auto equ = fit_baseline(BaselineKind::tequ, t, g, 2.0);
  EXPECT_EQ(equ.delay_equal, 1.0);
  EXPECT_EQ(equ.activation_prob, 1.0);
  EXPECT_FALSE(equ.fallback);
  const auto exp = fit_baseline(BaselineKind::texp, t, g, 2.0);
  EXPECT_EQ(exp.delay_rate, 1.0);
  const auto edge = fit_baseline(BaselineKind::eexp, t, g, 2.0);
  EXPECT_EQ(edge.edge_rate(0, 1), 1.0);
  EXPECT_EQ(edge.edge_rate(1, 2), 1.0);
}

TEST(Fit, UnevenGaps) {
  const Graph g = chain(3);
  const Trend t({{0, 0.0}, {1, 1.0}, {2, 4.0}});
  const auto p = fit_baseline(BaselineKind::eexp, t, g, 4.0);
  EXPECT_EQ(p.delay_equal, 2.0);
  EXPECT_EQ(p.delay_rate, 0.5);
  EXPECT_EQ(p.edge_rate(0, 1), 1.0);
  EXPECT_NEAR(p.edge_rate(1, 2), 1.0 / 3.0, 1e-15);
}

TEST(Fit, SingleSeedFallsBack) {
  const Graph g = chain(3);
  const auto p = fit_baseline(BaselineKind::tequ, Trend({{0, 0.0}}), g, 5.0);
  EXPECT_TRUE(p.fallback);
  EXPECT_EQ(p.activation_prob, kFallbackActivationProb);
  EXPECT_THROW(fit_baseline(BaselineKind::tequ, Trend{}, g, 5.0), ValidationError);
}

TEST(Attribution, EarliestParent) {
  std::vector<std::pair<NodeId, NodeId>> e{{0, 2}, {1, 2}};
  const Graph g = Graph::from_edges(3, e, true);
  const auto r = attribute_activations(Trend({{1, 0.0}, {0, 1.0}, {2, 2.0}, {2, 3.0}}), g);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_FALSE(r[0].parent.has_value());
  EXPECT_EQ(r[2].node, 2);
  EXPECT_EQ(*r[2].parent, 1);
}

TEST(Simulate, DeterministicChain) {
  const Graph g = chain(3);
  BaselineParams p;
  p.activation_prob = 1.0;
  p.delay_equal = 1.0;
  SimConfig c;
  c.t_start = 10.0;
  c.t_end = 20.0;
  const auto run = simulate_baseline(p, g, Trend({{0, 10.0}}), c);
  ASSERT_EQ(run.size(), 2u);
  EXPECT_EQ(run[0].node, 1);
  EXPECT_EQ(run[0].time, 11.0);
  EXPECT_EQ(run[1].node, 2);
  EXPECT_EQ(run[1].time, 12.0);
}

TEST(Simulate, ZeroProbability) {
  const Graph g = star(10);
  BaselineParams p;
  p.activation_prob = 0.0;
  SimConfig c;
  c.t_end = 100.0;
  EXPECT_TRUE(simulate_baseline(p, g, Trend({{0, 0.0}}), c).empty());
}

TEST(Simulate, StarMean) {
  const Graph g = star(100);
  BaselineParams p;
  p.kind = BaselineKind::texp;
  p.activation_prob = 0.3;
  p.delay_rate = 2.0;
  SimConfig c;
  c.t_end = 1e9;
  c.seed = 3;
  double total = 0.0;
  const std::size_t runs = 4000;
  for (std::size_t r = 0; r < runs; ++r) total += static_cast<double>(simulate_baseline(p, g, Trend({{0, 0.0}}), c, r).size());
  EXPECT_NEAR(total / runs / 30.0, 1.0, 0.01);
}

// An attempt that would land inside the observed window is spent already.
TEST(Simulate, AttemptsBeforeStartDiscarded) {
  const Graph g = chain(2);
  BaselineParams p;
  p.activation_prob = 1.0;
  p.delay_equal = 1.0;
  SimConfig c;
  c.t_start = 5.0;
  c.t_end = 10.0;
  EXPECT_TRUE(simulate_baseline(p, g, Trend({{0, 3.0}}), c).empty());
}

TEST(Mult, ScalesCoverage) {
  const std::vector<double> cov{100.0};
  EXPECT_NEAR(intensity_from_coverage(cov, 1.1215)[0], 112.15, 1e-12);
  EXPECT_NEAR(intensity_from_coverage(cov, 1.2969)[0], 129.69, 1e-12);
  EXPECT_EQ(intensity_from_coverage(cov, 1.0)[0], 100.0);
}

TEST(Mult, SlopeThroughOrigin) {
  const std::vector<double> c1{1, 2}, i1{2, 4};
  EXPECT_EQ(fit_mult_factor(c1, i1), 2.0);
  const std::vector<double> c2{1}, i2{1};
  EXPECT_EQ(fit_mult_factor(c2, i2), 1.0);
  const std::vector<double> c3{1, 2, 3}, i3{1, 3, 3};
  EXPECT_NEAR(fit_mult_factor(c3, i3), 16.0 / 14.0, 1e-15);
  const std::vector<double> zero{0, 0};
  EXPECT_THROW(fit_mult_factor(zero, zero), ValidationError);
}

TEST(Mult, FromTrainingGrid) {
  const Graph g = chain(3);
  const Trend t({{0, 0.5}, {0, 0.6}, {1, 1.5}});
  const auto grid = training_grid(t, 2.0, 1.0);
  EXPECT_EQ(grid.count(), 2u);
  // coverage {1, 1}, intensity {2, 1}
  EXPECT_NEAR(fit_mult_factor(t, grid), 1.5, 1e-15);
}

TEST(Predict, MultSharesCv) {
  const Graph g = star(20);
  BaselineParams p;
  p.activation_prob = 0.5;
  p.mult_factor = 1.5;
  SimConfig c;
  c.t_end = 3.0;
  c.runs = 50;
  const auto r = predict_baseline(p, g, Trend({{0, 0.0}}), c, IntervalGrid(0, 1, 3), 0, Measure::coverage, true);
  EXPECT_EQ(r.model, "tequ-mult");
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.intensity_mean[i], 1.5 * r.coverage_mean[i], 1e-12);
    EXPECT_EQ(r.intensity_cv[i], r.coverage_cv[i]);
  }
}

TEST(Kind, Parse) {
  EXPECT_EQ(parse_baseline("eexp"), BaselineKind::eexp);
  EXPECT_THROW(parse_baseline("ic"), ValidationError);
}
