#include "pdmp/models.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "pdmp/error.hpp"
#include "pdmp/population.hpp"

namespace pdmp::models {
namespace {

template <class Fn>
void expect_invalid(Fn make, const std::string& key) {
  try {
    make();
    FAIL() << "expected InvalidParam for " << key;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParam);
    EXPECT_EQ(e.key(), key);
  }
}

std::vector<double> times_of(const Trajectory& tr, const std::string& kind) {
  std::vector<double> out;
  for (const auto& j : tr.jumps)
    if (j.kind == kind) out.push_back(j.t);
  return out;
}

TEST(Constructors, RejectInvalidParameters) {
  expect_invalid([] { return make_grasshopper({0.0, {}}); }, "lambda");
  expect_invalid([] { return make_telegraph({1.0, -1.0}); }, "c");
  expect_invalid([] { return make_rubinow({ScalarFunction(1.0), 0.0}); }, "m");
  expect_invalid([] { return make_two_phase_cell_cycle({ScalarFunction(1.0), ScalarFunction(1.0), 0.0}); }, "t_B");
  expect_invalid([] { return make_cell_cycle_one_phase({ScalarFunction(-1.0), ScalarFunction(1.0)}); }, "g");
  expect_invalid([] { return make_gene_expression({1.0, 1.0, ScalarFunction(0.0), ScalarFunction(1.0)}); }, "q0");
  expect_invalid([] { return make_gene_expression({-1.0, 1.0, ScalarFunction(1.0), ScalarFunction(1.0)}); }, "P");
  expect_invalid([] { SteinParams p; p.t_R = 0.0; return make_stein(p); }, "t_R");
  expect_invalid([] { AlleeParams p; p.A = 0.5; return make_allee(p); }, "A");
  expect_invalid([] { BirthSwitchParams p; p.b0 = 1.5; return make_birth_switch(p); }, "b0");
  expect_invalid([] { BirthSwitchParams p; p.b1 = 0.9; return make_birth_switch(p); }, "b1");
}

TEST(Grasshopper, NullJumpsKeepState) {
  const PdmpModel m = make_grasshopper({1.0, {}});
  Rng rng(1);
  const Trajectory tr = simulate_trajectory(m, {{2.5}, 0, 0.0}, 50.0, rng);
  EXPECT_GT(tr.jumps.size(), 0u);
  for (const auto& j : tr.jumps) EXPECT_EQ(j.post[0], 2.5);
}

TEST(Grasshopper, PoissonCountAndSymmetricDisplacement) {
  GrasshopperParams p;
  p.lambda = 2.0;
  p.jump = {JumpLaw::Kind::TwoPoint, 1.0, 0.0};
  const PdmpModel m = make_grasshopper(p);
  EnsembleOptions opt;
  opt.n_paths = 20000;
  opt.seed = 5;
  opt.horizon = 10.0;
  const EnsembleResult ens = simulate_ensemble(m, [](Rng&) { return ProcessState{{0.0}, 0, 0.0}; }, opt);
  std::vector<double> counts, xs;
  for (const auto& path : ens.paths) {
    counts.push_back(static_cast<double>(path.summary.jumps));
    xs.push_back(path.summary.final_state.x[0]);
  }
  const auto c = oracle::moments(counts), x = oracle::moments(xs);
  EXPECT_LT(std::abs(c.mean - 20.0), 3 * c.stderr_mean);
  EXPECT_LT(std::abs(x.mean), 3 * x.stderr_mean);
}

TEST(OnePhaseCellCycle, RejectsIntensityNotIntegrableAtZero) {
  // phi / g = 1 / x: Q(x) diverges at 0.
  expect_invalid([] { return make_cell_cycle_one_phase({ScalarFunction::parse("x"), ScalarFunction(1.0)}); }, "phi");
}

TEST(OnePhaseCellCycle, DivisionHalvesSize) {
  const PdmpModel m = make_cell_cycle_one_phase({ScalarFunction(1.0), ScalarFunction(1.0)});
  Rng rng(2);
  const Trajectory tr = simulate_trajectory(m, {{1.0}, 0, 0.0}, 200.0, rng);
  ASSERT_GT(tr.jumps.size(), 50u);
  for (const auto& j : tr.jumps) EXPECT_EQ(j.post[0], 0.5 * j.pre[0]);
  std::vector<double> gaps;
  double last = 0.0;
  for (double t : times_of(tr, kDivide)) {
    gaps.push_back(t - last);
    last = t;
  }
  EXPECT_LT(oracle::ks_statistic(gaps, [](double t) { return 1.0 - std::exp(-t); }),
            oracle::ks_critical_001(static_cast<double>(gaps.size())));
}

TEST(Rubinow, UnitGrowthCycleIsOne) {
  const PdmpModel m = make_rubinow({ScalarFunction(1.0), 1.0});
  Rng rng(3);
  const Trajectory tr = simulate_trajectory(m, {{1.0}, 0, 0.0}, 10.5, rng);
  ASSERT_EQ(tr.jumps.size(), 10u);
  for (std::size_t i = 0; i < tr.jumps.size(); ++i) {
    EXPECT_NEAR(tr.jumps[i].t, static_cast<double>(i + 1), 1e-8);
    EXPECT_EQ(tr.jumps[i].post[0], 1.0);
  }
}

TEST(Rubinow, CycleEqualsGrowthQuadrature) {
  const PdmpModel m = make_rubinow({ScalarFunction::parse("1 + x^2"), 0.7});
  const double cycle = oracle::simpson([](double r) { return 1.0 / (1.0 + r * r); }, 0.7, 1.4);
  Rng rng(4);
  const Trajectory tr = simulate_trajectory(m, {{0.7}, 0, 0.0}, 5.0, rng);
  ASSERT_GE(tr.jumps.size(), 3u);
  double last = 0.0;
  for (const auto& j : tr.jumps) {
    EXPECT_NEAR(j.t - last, cycle, 1e-8);
    last = j.t;
  }
}

TEST(TwoPhase, ProliferatingPhaseLastsExactlyTB) {
  TwoPhaseCellCycleParams p;
  p.g = ScalarFunction::parse("x");
  p.phi = ScalarFunction::parse("x");
  p.t_B = 0.5;
  const PdmpModel m = make_two_phase_cell_cycle(p);
  Rng rng(5);
  const Trajectory tr = simulate_trajectory(m, {{1.0, 0.0}, 0, 0.0}, 100.0, rng);
  double entered = -1.0;
  int divisions = 0;
  for (const auto& j : tr.jumps) {
    if (j.kind == kEnterB) entered = j.t;
    if (j.kind == kDivide) {
      ASSERT_GE(entered, 0.0);
      EXPECT_NEAR(j.t - entered, 0.5, 1e-9);
      EXPECT_NEAR(j.pre[1], 0.5, 1e-9);
      ++divisions;
    }
  }
  EXPECT_GT(divisions, 20);
}

TEST(Gene, ConstantRateDwellIsExponential) {
  const PdmpModel m = make_gene_expression({1.0, 1.0, ScalarFunction(2.0), ScalarFunction(1.0)});
  Rng rng(6);
  std::vector<double> dwell;
  for (int i = 0; i < 20000; ++i) dwell.push_back(next_event(m, {{0.7}, 0, 0.0}, rng, 1e6).dt);
  EXPECT_LT(oracle::ks_statistic(dwell, [](double t) { return 1.0 - std::exp(-2.0 * t); }),
            oracle::ks_critical_001(20000));
}

TEST(Gene, StateDependentDwellMatchesHazardIntegral) {
  // q0(x) = 1 + x along x0 e^{-t}: Lambda(t) = t + x0 (1 - e^{-t}).
  const PdmpModel m = make_gene_expression({1.0, 1.0, ScalarFunction::parse("1 + x"), ScalarFunction(1.0)});
  Rng rng(7);
  std::vector<double> dwell;
  for (int i = 0; i < 20000; ++i) dwell.push_back(next_event(m, {{0.8}, 0, 0.0}, rng, 1e6).dt);
  EXPECT_LT(oracle::ks_statistic(dwell, [](double t) { return 1.0 - std::exp(-(t + 0.8 * (1 - std::exp(-t)))); }),
            oracle::ks_critical_001(20000));
}

TEST(Stein, SuprathresholdInputAlwaysFires) {
  SteinParams p;
  p.lambda_I = 0.0;
  p.lambda_E = 2.0;
  p.a_E = 1.0;
  p.theta = 1.0;
  p.t_R = 0.3;
  const PdmpModel m = make_stein(p);
  Rng rng(8);
  const Trajectory tr = simulate_trajectory(m, {{0.0, 0.0}, 0, 0.0}, 20000.0, rng);
  const auto fires = times_of(tr, kFire);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < fires.size(); ++i) gaps.push_back(fires[i] - fires[i - 1]);
  const auto mg = oracle::moments(gaps);
  EXPECT_LT(std::abs(mg.mean - (0.3 + 0.5)), 3 * mg.stderr_mean);
  double fired_at = -1.0;
  for (const auto& j : tr.jumps) {
    EXPECT_NE(j.kind, kExcite);
    if (j.kind == kFire) fired_at = j.t;
    if (j.kind == kRecover) {
      EXPECT_NEAR(j.t - fired_at, 0.3, 1e-9);
    }
  }
}

// Independent event-list simulation of the neuron: Poisson input times at
// total rate lambda_E + lambda_I, exact exponential decay in between.
double stein_oracle_rate(const SteinParams& p, double horizon, std::mt19937_64& gen) {
  std::exponential_distribution<double> wait(p.lambda_E + p.lambda_I);
  std::bernoulli_distribution excite(p.lambda_E / (p.lambda_E + p.lambda_I));
  double t = 0.0, v = 0.0;
  int fires = 0;
  while (true) {
    const double dt = wait(gen);
    if (t + dt > horizon) break;
    t += dt;
    v *= std::exp(-p.alpha * dt);
    if (!excite(gen)) {
      v -= p.a_I;
    } else if (v >= p.theta - p.a_E) {
      ++fires;
      t += p.t_R;
      v = 0.0;
    } else {
      v += p.a_E;
    }
  }
  return fires / horizon;
}

TEST(Stein, FiringRateMatchesEventListOracle) {
  const SteinParams p{1.0, 0.6, 0.5, 2.0, 1.0, 1.0, 0.2};
  const PdmpModel m = make_stein(p);
  const double horizon = 200.0;
  std::vector<double> lib, ref;
  std::mt19937_64 gen(99);
  for (int k = 0; k < 400; ++k) {
    Rng rng = Rng::for_stream(31, k);
    const Trajectory tr = simulate_trajectory(m, {{0.0, 0.0}, 0, 0.0}, horizon, rng);
    lib.push_back(times_of(tr, kFire).size() / horizon);
    ref.push_back(stein_oracle_rate(p, horizon, gen));
  }
  const auto a = oracle::moments(lib), b = oracle::moments(ref);
  EXPECT_LT(std::abs(a.mean - b.mean), 3 * std::hypot(a.stderr_mean, b.stderr_mean));
  EXPECT_GT(a.mean, 0.1);
}

TEST(Stein, PotentialStaysBelowThreshold) {
  const SteinParams p{1.0, 0.6, 0.5, 2.0, 1.0, 1.0, 0.2};
  Rng rng(10);
  const Trajectory tr = simulate_trajectory(make_stein(p), {{0.0, 0.0}, 0, 0.0}, 500.0, rng);
  for (const auto& j : tr.jumps) {
    if (j.regime_pre == 0) {
      EXPECT_LT(j.pre[0], p.theta);
    }
    if (j.kind == kFire) {
      EXPECT_GE(j.pre[0], p.theta - p.a_E);
    }
  }
}

TEST(Allee, FrozenRegimesConverge) {
  const AlleeParams p;
  const PdmpModel m = make_allee(p);
  const auto [x1, x2] = allee_equilibria(p);
  EXPECT_LT(x1, x2);
  const std::vector<double> start{0.3};
  double prev = 0.3;
  for (double t = 1.0; t <= 40.0; t += 1.0) {
    const double x = flow_evolve(m.regime(0).flow, start, t)[0];
    EXPECT_GE(x, prev);
    prev = x;
  }
  EXPECT_NEAR(prev, p.K, 1e-6);
  const std::vector<double> above{x1 + 0.1};
  EXPECT_NEAR(flow_evolve(m.regime(1).flow, above, 200.0)[0], x2, 1e-6);
}

TEST(Allee, SwitchingPathStaysBetweenAttractors) {
  const AlleeParams p;
  const PdmpModel m = make_allee(p);
  const double x2 = allee_equilibria(p).second;
  Rng rng(11);
  const Trajectory tr = simulate_trajectory(m, {{0.5 * (x2 + p.K)}, 0, 0.0}, 500.0, rng);
  for (const auto& j : tr.jumps) {
    EXPECT_GE(j.pre[0], x2 - 1e-9);
    EXPECT_LE(j.pre[0], p.K + 1e-9);
  }
}

TEST(BirthSwitch, SignStructure) {
  const BirthSwitchParams p;
  const PdmpModel m = make_birth_switch(p);
  const double a = (p.b1 - p.mu) / p.c;
  for (double x : {0.01, 0.5, 1.0, 3.0}) EXPECT_LT(m.regime(0).flow.rhs(std::vector<double>{x})[0], 0.0);
  EXPECT_NEAR(m.regime(1).flow.rhs(std::vector<double>{a})[0], 0.0, 1e-15);
  Rng rng(12);
  const Trajectory tr = simulate_trajectory(m, {{0.5 * a}, 0, 0.0}, 200.0, rng);
  for (const auto& j : tr.jumps) {
    EXPECT_GT(j.pre[0], 0.0);
    EXPECT_LE(j.pre[0], a);
  }
}

TEST(Population, YuleMeanGrowsExponentially) {
  PopulationParams p;
  p.b = ScalarFunction(1.0);
  std::vector<double> sizes;
  for (int k = 0; k < 4000; ++k) {
    Rng rng = Rng::for_stream(13, k);
    sizes.push_back(static_cast<double>(simulate_population(p, {1.0}, 2.0, rng).final_sizes.size()));
  }
  const auto m = oracle::moments(sizes);
  EXPECT_LT(std::abs(m.mean - std::exp(2.0)), 3 * m.stderr_mean);
}

TEST(Population, SubcriticalChainGoesExtinct) {
  PopulationParams p;
  p.b = ScalarFunction(1.0);
  p.d = ScalarFunction(2.0);
  int extinct = 0;
  for (int k = 0; k < 10000; ++k) {
    Rng rng = Rng::for_stream(14, k);
    if (simulate_population(p, {1.0}, 50.0, rng).extinct) ++extinct;
  }
  EXPECT_GT(extinct / 10000.0, 0.99);
}

TEST(Population, NoDeathMeansNondecreasing) {
  PopulationParams p;
  p.g = ScalarFunction::parse("0.5*x");
  p.b = ScalarFunction::parse("x");
  Rng rng(15);
  const auto tr = simulate_population(p, {1.0, 0.5}, 4.0, rng);
  std::size_t n = 2;
  for (const auto& e : tr.events) {
    EXPECT_EQ(e.kind, PopulationEvent::Kind::Division);
    EXPECT_EQ(e.population_after, n + 1);
    n = e.population_after;
  }
}

TEST(Population, BlowupIsSignalled) {
  PopulationParams p;
  p.b = ScalarFunction(5.0);
  p.max_cells = 50;
  Rng rng(16);
  try {
    simulate_population(p, {1.0}, 100.0, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PopulationBlowup);
  }
}

}  // namespace
}  // namespace pdmp::models
