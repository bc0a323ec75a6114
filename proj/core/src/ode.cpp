#include "pdmp/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdmp/error.hpp"

namespace pdmp::ode {

namespace {

bool all_finite(const StateVec& v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

DenseStepper::DenseStepper(System system, StateVec x0, double t0, Tolerance tol)
    : system_(std::move(system)),
      tol_(tol),
      x_(std::move(x0)),
      x_prev_(x_),
      dxdt_(x_.size()),
      dxdt_prev_(x_.size()),
      x_trial_(x_.size()),
      dxdt_trial_(x_.size()),
      err_(x_.size()),
      t_(t0),
      t_prev_(t0) {
  if (!all_finite(x_)) throw Error(ErrorKind::NonFinite, "non-finite initial state");
  system_(x_, dxdt_, t_);
  if (!all_finite(dxdt_)) throw Error(ErrorKind::NonFinite, "non-finite vector field at initial state");
  dxdt_prev_ = dxdt_;
}

double DenseStepper::initial_step(double t_limit) {
  // Hairer, Norsett & Wanner starting step heuristic.
  const std::size_t n = x_.size();
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = tol_.abs + tol_.rel * std::abs(x_[i]);
    d0 = std::max(d0, std::abs(x_[i]) / sc);
    d1 = std::max(d1, std::abs(dxdt_[i]) / sc);
  }
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, t_limit - t_);
  StateVec x1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) x1[i] = x_[i] + h0 * dxdt_[i];
  system_(x1, f1, t_ + h0);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = tol_.abs + tol_.rel * std::abs(x_[i]);
    d2 = std::max(d2, std::abs(f1[i] - dxdt_[i]) / sc / h0);
  }
  double h1;
  if (!std::isfinite(d2) || std::max(d1, d2) <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
  }
  return std::min({100.0 * h0, h1, t_limit - t_});
}

double DenseStepper::error_norm(const StateVec& x_old, const StateVec& x_new) const {
  double e = 0.0;
  for (std::size_t i = 0; i < x_old.size(); ++i) {
    const double sc = tol_.abs + tol_.rel * std::max(std::abs(x_old[i]), std::abs(x_new[i]));
    e = std::max(e, std::abs(err_[i]) / sc);
  }
  return e;
}

void DenseStepper::step(double t_limit) {
  if (!(t_limit > t_)) return;
  if (dt_ <= 0.0) dt_ = initial_step(t_limit);

  auto sys = [this](const StateVec& x, StateVec& d, double t) { system_(x, d, t); };
  const double min_dt = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_));
  for (;;) {
    double dt = std::min(dt_, t_limit - t_);
    // Snap onto the limit instead of leaving a sliver step behind.
    if (t_limit - (t_ + dt) < 1e-3 * dt) dt = t_limit - t_;
    stepper_.do_step(sys, x_, dxdt_, t_, x_trial_, dxdt_trial_, dt, err_);
    const bool finite = all_finite(x_trial_) && all_finite(dxdt_trial_);
    const double e = finite ? error_norm(x_, x_trial_) : std::numeric_limits<double>::infinity();
    if (e <= 1.0) {
      const double fac = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
      x_prev_.swap(x_);
      dxdt_prev_.swap(dxdt_);
      x_.swap(x_trial_);
      dxdt_.swap(dxdt_trial_);
      t_prev_ = t_;
      t_ = (dt == t_limit - t_) ? t_limit : t_ + dt;
      dt_ = std::max(dt_, dt) * fac;
      ++accepted_;
      return;
    }
    const double fac = finite ? std::clamp(0.9 * std::pow(e, -0.2), 0.2, 1.0) : 0.25;
    dt_ = dt * fac;
    if (dt_ < min_dt) {
      throw Error(ErrorKind::NonFinite, finite ? "step size underflow in flow integrator"
                                               : "flow integrator produced non-finite values");
    }
  }
}

void DenseStepper::state_at(double t, StateVec& out) const {
  out.resize(x_.size());
  if (t >= t_) {
    out = x_;
  } else if (t <= t_prev_) {
    out = x_prev_;
  } else {
    stepper_.calc_state(t, out, x_prev_, dxdt_prev_, t_prev_, x_, dxdt_, t_);
  }
}

StateVec integrate(const System& system, StateVec x0, double t0, double t1, Tolerance tol) {
  if (t1 <= t0) return x0;
  DenseStepper stepper(system, std::move(x0), t0, tol);
  while (stepper.current_time() < t1) stepper.step(t1);
  return stepper.current_state();
}

}  // namespace pdmp::ode
