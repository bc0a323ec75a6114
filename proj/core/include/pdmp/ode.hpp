#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

namespace pdmp::ode {

using StateVec = std::vector<double>;
/// Right-hand side `dxdt = f(x, t)`.
using System = std::function<void(const StateVec& x, StateVec& dxdt, double t)>;

struct Tolerance {
  double rel = 1e-10;
  double abs = 1e-12;
};

/// Adaptive Dormand-Prince 5(4) driver with continuous output.
///
/// Each call to `step` takes one accepted step that never passes `t_limit`,
/// after which the solution anywhere on [previous_time, current_time] is
/// available through `state_at`. Event location (hazard crossings, boundary
/// hits, domain exits) is done by the callers on top of that interpolant.
class DenseStepper {
 public:
  DenseStepper(System system, StateVec x0, double t0, Tolerance tol = {});

  void step(double t_limit);

  double previous_time() const { return t_prev_; }
  double current_time() const { return t_; }
  const StateVec& previous_state() const { return x_prev_; }
  const StateVec& current_state() const { return x_; }
  std::size_t accepted_steps() const { return accepted_; }

  void state_at(double t, StateVec& out) const;

 private:
  double initial_step(double t_limit);
  double error_norm(const StateVec& x_old, const StateVec& x_new) const;

  System system_;
  Tolerance tol_;
  boost::numeric::odeint::runge_kutta_dopri5<StateVec> stepper_;
  StateVec x_, x_prev_, dxdt_, dxdt_prev_, x_trial_, dxdt_trial_, err_;
  double t_;
  double t_prev_;
  double dt_ = 0.0;
  std::size_t accepted_ = 0;
};

/// Integrates from t0 to t1 and returns x(t1).
StateVec integrate(const System& system, StateVec x0, double t0, double t1, Tolerance tol = {});

}  // namespace pdmp::ode
