#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pdmp/rng.hpp"

namespace pdmp {

using State = std::vector<double>;

/// g(x) written into `dxdt`.
using VectorField = std::function<void(std::span<const double> x, std::span<double> dxdt)>;
/// pi_t(x0) written into `out`.
using ClosedForm = std::function<void(double t, std::span<const double> x0, std::span<double> out)>;
/// Row-major d x d matrix, jac[i*d + k] = d g_i / d x_k.
using Jacobian = std::function<void(std::span<const double> x, std::span<double> jac)>;
using ScalarField = std::function<double(std::span<const double> x)>;
using DomainTest = std::function<bool(std::span<const double> x)>;

struct FlowTolerances {
  double rel = 1e-10;  ///< relative per-step tolerance of the integrator
  double abs = 1e-12;
  double event = 1e-10;  ///< time resolution of crossing / boundary localization
  double horizon_cap = 1e6;
};

/// Deterministic motion law of one regime.
class Flow {
 public:
  Flow(std::size_t dimension, VectorField rhs);

  /// g == 0: the state does not move between jumps.
  static Flow frozen(std::size_t dimension);

  Flow& with_closed_form(ClosedForm closed_form);
  Flow& with_jacobian(Jacobian jacobian);
  Flow& with_domain(DomainTest inside);

  std::size_t dimension() const { return dim_; }
  bool is_frozen() const { return frozen_; }
  bool has_closed_form() const { return static_cast<bool>(closed_form_); }
  bool has_jacobian() const { return static_cast<bool>(jacobian_); }
  bool has_domain() const { return static_cast<bool>(domain_); }

  void rhs(std::span<const double> x, std::span<double> dxdt) const { rhs_(x, dxdt); }
  State rhs(std::span<const double> x) const;
  void closed_form(double t, std::span<const double> x0, std::span<double> out) const {
    closed_form_(t, x0, out);
  }
  /// Analytic Jacobian when supplied, otherwise central differences with
  /// step 1e-6 * (1 + |x_k|).
  void jacobian(std::span<const double> x, std::span<double> jac) const;
  bool in_domain(std::span<const double> x) const { return !domain_ || domain_(x); }

 private:
  std::size_t dim_;
  VectorField rhs_;
  ClosedForm closed_form_;
  Jacobian jacobian_;
  DomainTest domain_;
  bool frozen_ = false;
};

/// Jump intensity lambda(x) >= 0, optionally with a global upper bound used
/// by the thinning sampler.
class Hazard {
 public:
  explicit Hazard(ScalarField rate, std::optional<double> upper_bound = std::nullopt);

  static Hazard constant(double rate);

  double rate(std::span<const double> x) const { return rate_(x); }
  double operator()(std::span<const double> x) const { return rate_(x); }
  std::optional<double> upper_bound() const { return upper_bound_; }
  /// Set when the rate does not depend on the state at all.
  std::optional<double> constant_rate() const { return constant_; }

 private:
  ScalarField rate_;
  std::optional<double> upper_bound_;
  std::optional<double> constant_;
};

/// pi_t(x0). Uses the closed form when present; otherwise integrates.
/// Throws DomainExit if the path leaves the flow's domain first.
State flow_evolve(const Flow& flow, std::span<const double> x0, double t,
                  const FlowTolerances& tol = {});

/// Cumulative hazard  \int_0^t rate(pi_s x0) ds.
double hazard_integral(const Flow& flow, const Hazard& hazard, std::span<const double> x0, double t,
                       const FlowTolerances& tol = {});

enum class SamplingMethod { InverseTransform, Thinning };

/// Draws the first jump time of a single hazard along the flow:
/// P(tau <= t) = 1 - exp(-\int_0^t rate(pi_s x0) ds).
/// Returns nullopt when the path survives past `horizon` (defaults to
/// `tol.horizon_cap`). Thinning requires `hazard.upper_bound()`.
std::optional<double> sample_jump_time(const Flow& flow, const Hazard& hazard,
                                       std::span<const double> x0, Rng& rng,
                                       SamplingMethod method = SamplingMethod::InverseTransform,
                                       std::optional<double> horizon = std::nullopt,
                                       const FlowTolerances& tol = {});

/// Outcome of following a flow until the first of several competing
/// triggers fires.
struct Passage {
  enum class Cause { TimeLimit, Hazard, Boundary };
  Cause cause = Cause::TimeLimit;
  std::size_t index = 0;  ///< which hazard / boundary fired
  double time = 0.0;
  State state;            ///< left limit pi_time(x0)
};

/// Integrates the flow augmented with one cumulative-hazard coordinate per
/// hazard and stops at the earliest of: hazard i reaching `levels[i]`,
/// boundary function j changing sign, or `t_limit`. Crossings are bracketed
/// by accepted integrator steps and refined by bisection to `tol.event`.
/// On exact ties a boundary wins over a hazard and lower indices win.
Passage first_passage(const Flow& flow, std::span<const double> x0,
                      std::span<const Hazard* const> hazards, std::span<const double> levels,
                      std::span<const ScalarField* const> boundaries, double t_limit,
                      const FlowTolerances& tol = {});

}  // namespace pdmp
