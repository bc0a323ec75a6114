#include "pdmp/process.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "pdmp/error.hpp"
#include "pdmp/models.hpp"

namespace pdmp {
namespace {

JumpKernel stay() {
  return {[](std::span<const double> pre, int regime, Rng&) {
            return JumpOutcome{State(pre.begin(), pre.end()), regime, "tick"};
          },
          "x -> x"};
}

PdmpModel competing(double l1, double l2) {
  Regime r{"only", Flow::frozen(1), {{"first", Hazard::constant(l1), stay()}, {"second", Hazard::constant(l2), stay()}}, {}};
  return PdmpModel("competing", 1, {r});
}

TEST(NextEvent, CompetingHazardsSuperpose) {
  const PdmpModel m = competing(1.0, 3.0);
  Rng rng(5);
  const ProcessState s{{0.0}, 0, 0.0};
  const int n = 100000;
  std::vector<double> times;
  int second = 0;
  for (int i = 0; i < n; ++i) {
    const Event e = next_event(m, s, rng, 1e6);
    ASSERT_TRUE(e.occurred);
    times.push_back(e.dt);
    if (e.cause == 1) ++second;
  }
  EXPECT_LT(oracle::ks_statistic(times, [](double t) { return 1.0 - std::exp(-4.0 * t); }),
            oracle::ks_critical_001(n));
  const double freq = static_cast<double>(second) / n;
  EXPECT_NEAR(freq, 0.75, std::min(0.01, 3.0 * std::sqrt(0.75 * 0.25 / n)));
}

TEST(NextEvent, NothingBeforeCap) {
  const PdmpModel m = competing(1e-9, 1e-9);
  Rng rng(1);
  const Event e = next_event(m, {{0.0}, 0, 0.0}, rng, 1.0);
  EXPECT_FALSE(e.occurred);
  EXPECT_DOUBLE_EQ(e.dt, 1.0);
}

TEST(NextEvent, SteinWithoutInhibitionOnlyExcites) {
  models::SteinParams p;
  p.lambda_I = 0.0;
  p.lambda_E = 2.0;
  p.a_E = 0.1;
  p.theta = 100.0;
  const PdmpModel m = models::make_stein(p);
  Rng rng(8);
  std::vector<double> dts;
  ProcessState s{{0.0, 0.0}, 0, 0.0};
  for (int i = 0; i < 20000; ++i) {
    const Event e = next_event(m, s, rng, 1e6);
    ASSERT_TRUE(e.occurred);
    EXPECT_EQ(e.kind, models::kExcite);
    dts.push_back(e.dt);
    s = {e.post, e.regime_post, 0.0};
  }
  EXPECT_LT(oracle::ks_statistic(dts, [](double t) { return 1.0 - std::exp(-2.0 * t); }),
            oracle::ks_critical_001(20000));
}

TEST(NextEvent, TwoPhaseDivisionAfterFixedDelay) {
  models::TwoPhaseCellCycleParams p;
  p.g = ScalarFunction(0.5);
  p.t_B = 0.75;
  const PdmpModel m = models::make_two_phase_cell_cycle(p);
  Rng rng(2);
  const ProcessState in_b{{1.2, 0.0}, 1, 0.0};
  const Event e = next_event(m, in_b, rng, 1e6);
  ASSERT_TRUE(e.occurred);
  EXPECT_TRUE(e.deterministic);
  EXPECT_NEAR(e.dt, 0.75, 1e-12);
  EXPECT_EQ(e.regime_post, 0);
  EXPECT_NEAR(e.pre[0], 1.2 + 0.5 * 0.75, 1e-10);
  EXPECT_NEAR(e.post[0], 0.5 * e.pre[0], 1e-14);
}

TEST(SimulateTrajectory, TelegraphStaysInLightCone) {
  const PdmpModel m = models::make_telegraph({2.0, 1.5});
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const Trajectory tr = simulate_trajectory(m, {{0.0, 1.5}, 0, 0.0}, 10.0, rng);
    for (const auto& j : tr.jumps) {
      EXPECT_LE(std::abs(j.pre[0]), 1.5 * j.t + 1e-9);
      EXPECT_DOUBLE_EQ(std::abs(j.post[1]), 1.5);
      EXPECT_DOUBLE_EQ(j.post[1], -j.pre[1]);
    }
    EXPECT_LE(std::abs(tr.final_state[0]), 15.0 + 1e-9);
  }
}

TEST(SimulateTrajectory, GrasshopperIsConstantBetweenJumps) {
  models::GrasshopperParams p;
  p.lambda = 3.0;
  p.jump = {models::JumpLaw::Kind::Normal, 0.0, 1.0};
  const PdmpModel m = models::make_grasshopper(p);
  Rng rng(4);
  const Trajectory tr = simulate_trajectory(m, {{0.5}, 0, 0.0}, 20.0, rng);
  ASSERT_GT(tr.jumps.size(), 10u);
  double x = 0.5;
  for (const auto& j : tr.jumps) {
    EXPECT_EQ(j.pre[0], x);
    x = j.post[0];
  }
  EXPECT_EQ(tr.final_state[0], x);
}

TEST(SimulateTrajectory, GeneInterval) {
  const PdmpModel m = models::make_gene_expression({});
  Rng rng(6);
  const Trajectory tr = simulate_trajectory(m, {{0.3}, 0, 0.0}, 500.0, rng);
  for (const auto& s : tr.segments) {
    EXPECT_GE(s.state[0], 0.0);
    EXPECT_LE(s.state[0], 1.0);
  }
}

TEST(SimulateTrajectory, SegmentsReproducePreJumpStates) {
  const PdmpModel m = models::make_birth_switch({});
  Rng rng(9);
  const Trajectory tr = simulate_trajectory(m, {{0.3}, 0, 0.0}, 50.0, rng);
  ASSERT_EQ(tr.segments.size(), tr.jumps.size() + 1);
  for (std::size_t i = 0; i < tr.jumps.size(); ++i) {
    const auto& seg = tr.segments[i];
    const State end = flow_evolve(m.regime(seg.regime).flow, seg.state, tr.jumps[i].t - seg.t_start);
    EXPECT_NEAR(end[0], tr.jumps[i].pre[0], 1e-9);
  }
}

TEST(SimulateTrajectory, BitIdenticalForSameSeed) {
  const PdmpModel m = models::make_gene_expression({});
  Rng a(77), b(77);
  const Trajectory ta = simulate_trajectory(m, {{0.0}, 0, 0.0}, 100.0, a);
  const Trajectory tb = simulate_trajectory(m, {{0.0}, 0, 0.0}, 100.0, b);
  ASSERT_EQ(ta.jumps.size(), tb.jumps.size());
  for (std::size_t i = 0; i < ta.jumps.size(); ++i) {
    EXPECT_EQ(ta.jumps[i].t, tb.jumps[i].t);
    EXPECT_EQ(ta.jumps[i].post, tb.jumps[i].post);
  }
}

TEST(SimulateTrajectory, JumpBudgetIsEnforced) {
  const PdmpModel m = competing(100.0, 100.0);
  Rng rng(1);
  SimulationOptions opt;
  opt.max_jumps = 100;
  try {
    simulate_trajectory(m, {{0.0}, 0, 0.0}, 100.0, rng, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::JumpBudgetExceeded);
  }
}

TEST(SimulateEnsemble, SinglePathMatchesTrajectory) {
  const PdmpModel m = models::make_telegraph({1.0, 1.0});
  EnsembleOptions opt;
  opt.seed = 42;
  opt.horizon = 5.0;
  opt.record_trajectories = true;
  const auto init = [](Rng&) { return ProcessState{{0.0, 1.0}, 0, 0.0}; };
  const EnsembleResult ens = simulate_ensemble(m, init, opt);
  Rng rng = Rng::for_stream(42, 0);
  const ProcessState s0 = init(rng);
  const Trajectory tr = simulate_trajectory(m, s0, 5.0, rng);
  ASSERT_TRUE(ens.paths[0].trajectory.has_value());
  const Trajectory& te = *ens.paths[0].trajectory;
  ASSERT_EQ(te.jumps.size(), tr.jumps.size());
  EXPECT_EQ(te.final_state, tr.final_state);
}

TEST(SimulateEnsemble, IndependentOfThreadCount) {
  const PdmpModel m = models::make_gene_expression({});
  EnsembleOptions opt;
  opt.n_paths = 200;
  opt.seed = 3;
  opt.horizon = 10.0;
  opt.snapshot_times = {1.0, 5.0, 10.0};
  const auto init = [](Rng& r) { return ProcessState{{r.uniform()}, 0, 0.0}; };
  const EnsembleResult one = simulate_ensemble(m, init, opt);
  opt.threads = 3;
  const EnsembleResult three = simulate_ensemble(m, init, opt);
  for (std::size_t i = 0; i < opt.n_paths; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(one.paths[i].snapshots[k].x, three.paths[i].snapshots[k].x);
}

TEST(SimulateEnsemble, TelegraphMomentsMatchFineStepOracle) {
  const double t = 5.0;
  const PdmpModel m = models::make_telegraph({1.0, 1.0});
  EnsembleOptions opt;
  opt.n_paths = 40000;
  opt.seed = 17;
  opt.horizon = t;
  opt.snapshot_times = {t};
  const EnsembleResult ens =
      simulate_ensemble(m, [](Rng& r) { return ProcessState{{0.0, r.bernoulli(0.5) ? 1.0 : -1.0}, 0, 0.0}; }, opt);
  std::vector<double> x, x2;
  for (const auto& p : ens.paths) {
    x.push_back(p.snapshots.at(0).x[0]);
    x2.push_back(x.back() * x.back());
  }
  const auto mx = oracle::moments(x);
  EXPECT_LT(std::abs(mx.mean), 3 * mx.stderr_mean);

  std::mt19937_64 gen(2024);
  std::vector<double> y2;
  for (int i = 0; i < 20000; ++i) {
    const double y = oracle::telegraph_fine_step(gen, 1.0, 1.0, t);
    y2.push_back(y * y);
  }
  const auto a = oracle::moments(x2), b = oracle::moments(y2);
  EXPECT_LT(std::abs(a.mean - b.mean), 3 * std::hypot(a.stderr_mean, b.stderr_mean));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
}  // namespace pdmp
