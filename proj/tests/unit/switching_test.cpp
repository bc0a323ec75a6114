#include "pdmp/switching.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "oracles.hpp"
#include "pdmp/error.hpp"
#include "pdmp/hormander.hpp"
#include "pdmp/models.hpp"

namespace pdmp::switching {
namespace {

SwitchingSystem1D gene_system(double kappa = 1.0) {
  return {[](double x) { return -x; }, [](double x) { return 1.0 - x; }, [kappa](double) { return kappa; },
          [kappa](double) { return kappa; }, 0.0, 1.0, 0.5};
}

models::BirthSwitchParams birth(double b0, double b1) {
  models::BirthSwitchParams p;
  p.b0 = b0;
  p.b1 = b1;
  return p;
}

TEST(StationaryDensity, GeneClosedForm) {
  const StationaryDensity d(gene_system());
  ASSERT_TRUE(d.normalizable());
  for (double x = 0.05; x < 1.0; x += 0.05) {
    EXPECT_NEAR(d.density(0, x), oracle::gene_f0(x), 1e-9);
    EXPECT_NEAR(d.density(1, x), oracle::gene_f1(x), 1e-9);
    // R(x) = -ln x - ln(1 - x) + 2 ln(1/2) from the reference point 1/2.
    EXPECT_NEAR(d.R(x), -std::log(x) - std::log(1.0 - x) + 2.0 * std::log(0.5), 1e-10);
  }
  EXPECT_NEAR(d.mass(0, 0.0, 1.0) + d.mass(1, 0.0, 1.0), 1.0, 1e-9);
  EXPECT_NEAR(d.alpha(), 4.0, 1e-9);
}

void expect_stationary_residual(const SwitchingSystem1D& s, const StationaryDensity& d) {
  const double h = 1e-5;
  for (int i = 1; i < 40; ++i) {
    const double x = s.lower + (s.upper - s.lower) * i / 40.0;
    auto flux = [&](int k, double y) { return (k == 0 ? s.g0(y) : s.g1(y)) * d.unnormalized(k, y); };
    const double d0 = (flux(0, x + h) - flux(0, x - h)) / (2 * h);
    const double d1 = (flux(1, x + h) - flux(1, x - h)) / (2 * h);
    const double f0 = d.unnormalized(0, x), f1 = d.unnormalized(1, x);
    const double scale = 1.0 + std::abs(s.q0(x) * f0) + std::abs(s.q1(x) * f1);
    EXPECT_LT(std::abs(d0 - (s.q1(x) * f1 - s.q0(x) * f0)) / scale, 1e-8) << "x = " << x;
    EXPECT_LT(std::abs(d1 - (s.q0(x) * f0 - s.q1(x) * f1)) / scale, 1e-8) << "x = " << x;
  }
}

TEST(StationaryDensity, SolvesStationarySystem) {
  expect_stationary_residual(gene_system(), StationaryDensity(gene_system()));
  models::BirthSwitchParams p = birth(0.5, 2.0);
  p.q0 = ScalarFunction::parse("1 + x");
  p.q1 = ScalarFunction::parse("2 - 0.3*x");
  const SwitchingSystem1D s = models::switching_system(p);
  expect_stationary_residual(s, StationaryDensity(s));
}

TEST(StationaryDensity, NonNormalizableThrowsOnDensity) {
  const SwitchingSystem1D s = models::switching_system(birth(0.2, 1.5));
  const StationaryDensity d(s);
  EXPECT_FALSE(d.normalizable());
  EXPECT_THROW(d.density(0, 0.1), Error);
}

TEST(Classify, StableBirthSwitch) {
  const auto p = birth(0.5, 2.0);
  const ClassificationReport r = classify(models::switching_system(p), models::switching_derivatives(p));
  EXPECT_EQ(r.verdict, Verdict::Stable);
  EXPECT_DOUBLE_EQ(r.r0, -1.0);
  EXPECT_DOUBLE_EQ(r.lambda_mean, 0.25);
  EXPECT_TRUE(r.sign_premises);
  EXPECT_TRUE(std::isfinite(r.alpha));
}

TEST(Classify, SweepingBirthSwitch) {
  const auto p = birth(0.2, 1.5);
  const ClassificationReport r = classify(models::switching_system(p), models::switching_derivatives(p));
  EXPECT_EQ(r.verdict, Verdict::Sweeping);
  EXPECT_NEAR(r.r0, 0.75, 1e-15);
  EXPECT_NEAR(r.lambda_mean, -0.15, 1e-15);
  EXPECT_TRUE(std::isinf(r.alpha));
  EXPECT_NEAR(r.p0, 0.5, 1e-15);
}

TEST(Classify, DifferencedDerivativesAgree) {
  const auto p = birth(0.5, 2.0);
  const ClassificationReport r = classify(models::switching_system(p));
  EXPECT_NEAR(r.r0, -1.0, 1e-8);
}

TEST(Classify, VerdictInvariantUnderCommonRateScaling) {
  for (double kappa : {0.25, 1.0, 4.0}) {
    auto p = birth(0.5, 2.0);
    p.q0 = ScalarFunction(kappa);
    p.q1 = ScalarFunction(kappa);
    const auto stable = classify(models::switching_system(p), models::switching_derivatives(p));
    EXPECT_EQ(stable.verdict, Verdict::Stable);
    EXPECT_NEAR(stable.r0, -kappa, 1e-12);
    p.b0 = 0.2;
    p.b1 = 1.5;
    const auto sweep = classify(models::switching_system(p), models::switching_derivatives(p));
    EXPECT_EQ(sweep.verdict, Verdict::Sweeping);
    EXPECT_NEAR(sweep.r0, 0.75 * kappa, 1e-12);
  }
  const StationaryDensity a(gene_system(1.0)), b(gene_system(3.0));
  EXPECT_NEAR(b.R(0.2), 3.0 * a.R(0.2), 1e-9);
}

TEST(Classify, SignAgreesWithIntegrabilityOnRandomDraws) {
  Rng rng(2);
  int checked = 0;
  for (int k = 0; k < 40; ++k) {
    models::BirthSwitchParams p;
    p.mu = 1.0;
    p.b0 = rng.uniform(0.0, 0.95);
    p.b1 = rng.uniform(1.05, 3.0);
    p.q0 = ScalarFunction(rng.uniform(0.3, 3.0));
    p.q1 = ScalarFunction(rng.uniform(0.3, 3.0));
    const auto r = classify(models::switching_system(p), models::switching_derivatives(p));
    if (std::abs(r.r0) < 0.05) continue;
    EXPECT_EQ(r.verdict, r.r0 < 0 ? Verdict::Stable : Verdict::Sweeping) << "r0 = " << r.r0;
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(Classify, JsonFields) {
  const auto p = birth(0.2, 1.5);
  const auto j = nlohmann::json::parse(to_json(classify(models::switching_system(p))));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["verdict"], "Sweeping");
  EXPECT_EQ(j["alpha"], "inf");
  for (const char* key : {"r0", "lambda_mean", "p0", "p1", "divergence_exponent"}) EXPECT_TRUE(j.contains(key));
}

TEST(Validate, RejectsBrokenSignStructure) {
  SwitchingSystem1D s = gene_system();
  s.g1 = [](double x) { return 0.5 - x; };
  EXPECT_THROW(validate(s), Error);
  s = gene_system();
  s.q0 = [](double) { return 0.0; };
  EXPECT_THROW(validate(s), Error);
}

}  // namespace
}  // namespace pdmp::switching

namespace pdmp::hormander {
namespace {

Flow affine(double a, double b) {
  return Flow(1, [a, b](std::span<const double> x, std::span<double> d) { d[0] = a + b * x[0]; });
}

TEST(Hormander, GeneFieldsSpanTheLine) {
  const std::vector<Flow> f{affine(0.0, -1.0), affine(1.0, -1.0)};
  for (double x : {0.1, 0.5, 0.9}) {
    const std::vector<double> p{x};
    const HormanderResult r = hormander_check(f, p);
    EXPECT_TRUE(r.holds);
    EXPECT_EQ(r.rank, 1u);
  }
}

TEST(Hormander, IdenticalFieldsFail) {
  const std::vector<Flow> f{affine(1.0, -1.0), affine(1.0, -1.0)};
  const std::vector<double> p{0.3};
  const HormanderResult r = hormander_check(f, p);
  EXPECT_FALSE(r.holds);
  EXPECT_EQ(r.rank, 0u);
}

TEST(Hormander, BracketSuppliesMissingDirection) {
  // g1 = (1, 0), g2 = (-1, x): the difference is horizontal at the origin and
  // [g1, g2] = (0, 1) is vertical.
  Flow g1(2, [](std::span<const double>, std::span<double> d) { d[0] = 1.0; d[1] = 0.0; });
  Flow g2(2, [](std::span<const double> x, std::span<double> d) { d[0] = -1.0; d[1] = x[0]; });
  const std::vector<Flow> f{g1, g2};
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_FALSE(hormander_check(f, origin, 1).holds);
  const HormanderResult r = hormander_check(f, origin, 2);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.rank, 2u);
}

TEST(Hormander, NumericalRank) {
  const std::vector<State> v{{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, {0.0, 1.0, 1e-14}};
  EXPECT_EQ(numerical_rank(v, 3, 1e-8), 2u);
}

TEST(Positivity, ConstantRates) {
  const ScalarField one = [](std::span<const double>) { return 1.0; };
  const std::vector<std::vector<ScalarField>> q{{{}, one}, {one, {}}};
  const auto r = intensity_positivity_check(q, [](Rng& g) { return State{g.uniform()}; }, 500);
  EXPECT_TRUE(r.positive);
  EXPECT_DOUBLE_EQ(r.minimum, 1.0);
}

TEST(Positivity, VanishingAtTheBoundary) {
  const ScalarField lin = [](std::span<const double> x) { return x[0]; };
  const std::vector<std::vector<ScalarField>> q{{{}, lin}, {lin, {}}};
  EXPECT_TRUE(intensity_positivity_check(q, [](Rng& g) { return State{g.uniform(0.1, 1.0)}; }, 500).positive);
  const auto with_zero = intensity_positivity_check(
      q, [](Rng& g) { return State{g.bernoulli(0.1) ? 0.0 : g.uniform()}; }, 500);
  EXPECT_FALSE(with_zero.positive);
  EXPECT_EQ(with_zero.argmin[0], 0.0);
}

TEST(Positivity, GeneRatesBetweenEquilibria) {
  const ScalarField q0 = [](std::span<const double> x) { return 1.0 + x[0]; };
  const ScalarField q1 = [](std::span<const double> x) { return 2.0 - x[0]; };
  const std::vector<std::vector<ScalarField>> q{{{}, q1}, {q0, {}}};
  EXPECT_TRUE(intensity_positivity_check(q, [](Rng& g) { return State{g.uniform()}; }, 1000).positive);
}

}  // namespace
}  // namespace pdmp::hormander
