#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "pdmp/process.hpp"
#include "pdmp/scalar_function.hpp"
#include "pdmp/switching.hpp"

namespace pdmp::models {

/// Jump displacement law for the compound Poisson model.
struct JumpLaw {
  enum class Kind { Zero, TwoPoint, Normal, Uniform };
  Kind kind = Kind::Zero;
  double a = 0.0;  ///< two_point: magnitude; normal: mean; uniform: lower
  double b = 0.0;  ///< normal: sd; uniform: upper
  double draw(Rng& rng) const;
  std::string describe() const;
};

struct GrasshopperParams {
  double lambda = 1.0;
  JumpLaw jump;
};

struct TelegraphParams {
  double lambda = 1.0;
  double c = 1.0;
};

struct OnePhaseCellCycleParams {
  ScalarFunction g{1.0};
  ScalarFunction phi{1.0};
};

struct RubinowParams {
  ScalarFunction g{1.0};
  double m = 1.0;
};

struct TwoPhaseCellCycleParams {
  ScalarFunction g{1.0};
  ScalarFunction phi{1.0};
  double t_B = 1.0;
};

struct GeneExpressionParams {
  double P = 1.0;
  double mu = 1.0;
  ScalarFunction q0{1.0};  ///< inactive -> active
  ScalarFunction q1{1.0};  ///< active -> inactive
};

struct SteinParams {
  double alpha = 1.0;
  double a_E = 0.5;
  double a_I = 0.5;
  double lambda_E = 1.0;
  double lambda_I = 1.0;
  double theta = 1.0;
  double t_R = 0.1;
};

struct AlleeParams {
  double lambda = 1.0;
  double K = 10.0;
  double A = 1.5;
  double B = 1.0;
  ScalarFunction q01{1.0};  ///< regime 0 -> regime 1
  ScalarFunction q10{1.0};  ///< regime 1 -> regime 0
};

struct BirthSwitchParams {
  double b0 = 0.5;
  double b1 = 2.0;
  double c = 1.0;
  double mu = 1.0;
  ScalarFunction q0{1.0};  ///< regime 0 -> regime 1
  ScalarFunction q1{1.0};  ///< regime 1 -> regime 0
};

// Regime and event names used in trajectory output.
inline constexpr const char* kJump = "jump";
inline constexpr const char* kFlip = "flip";
inline constexpr const char* kDivide = "divide";
inline constexpr const char* kEnterB = "enter_B";
inline constexpr const char* kSwitch = "switch";
inline constexpr const char* kExcite = "excite";
inline constexpr const char* kInhibit = "inhibit";
inline constexpr const char* kFire = "fire";
inline constexpr const char* kRecover = "recover";

/// Pure jump model: frozen flow, constant hazard, x -> x + Y. Dimension 1.
PdmpModel make_grasshopper(const GrasshopperParams& p);
/// State (x, v), x' = v, v flips sign at rate lambda.
PdmpModel make_telegraph(const TelegraphParams& p);
/// Size x grows by x' = g(x), divides at rate phi(x) into x/2.
PdmpModel make_cell_cycle_one_phase(const OnePhaseCellCycleParams& p);
/// Size x grows by x' = g(x) and divides exactly on reaching 2m, restarting at m.
PdmpModel make_rubinow(const RubinowParams& p);
/// State (x, y); regime 0 is the resting phase, regime 1 the proliferating
/// phase in which y counts elapsed time and division happens after t_B.
PdmpModel make_two_phase_cell_cycle(const TwoPhaseCellCycleParams& p);
/// Protein level x; regime 0 inactive (x' = -mu x), regime 1 active
/// (x' = P - mu x).
PdmpModel make_gene_expression(const GeneExpressionParams& p);
/// State (V, y); regime 0 subthreshold, regime 1 refractory.
PdmpModel make_stein(const SteinParams& p);
/// Regime 0 logistic growth, regime 1 growth with an Allee effect.
PdmpModel make_allee(const AlleeParams& p);
/// x' = (b_i - mu) x - c x^2 in regime i.
PdmpModel make_birth_switch(const BirthSwitchParams& p);

/// Interior equilibria x1 < x2 of the Allee-effect field. Throws
/// NoInteriorRoots if the parameters do not produce two.
std::pair<double, double> allee_equilibria(const AlleeParams& p);

/// Solution of x' = r x - c x^2 from x0 after time t, stable for r -> 0.
double logistic_flow(double r, double c, double x0, double t);

/// One-dimensional systems for the switching analysis. The gene model lives
/// on (0, P/mu), the birth switch on (0, a), the Allee model on (x2, K).
switching::SwitchingSystem1D switching_system(const GeneExpressionParams& p);
switching::SwitchingSystem1D switching_system(const BirthSwitchParams& p);
switching::SwitchingSystem1D switching_system(const AlleeParams& p);

/// Exact derivatives of the velocity fields at the interval ends.
switching::Derivatives switching_derivatives(const BirthSwitchParams& p);

}  // namespace pdmp::models
