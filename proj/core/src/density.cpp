#include "pdmp/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "pdmp/error.hpp"
#include "pdmp/io.hpp"

namespace pdmp::density {

namespace {

/// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& v) {
  double sum = 0.0, c = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) c += (sum - t) + x;
    else c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

std::vector<double> face_velocities(const Grid1D& grid, const Fn& g) {
  std::vector<double> v(grid.n + 1);
  for (std::size_t i = 0; i <= grid.n; ++i) {
    v[i] = g(grid.left(i));
    if (!std::isfinite(v[i])) throw Error(ErrorKind::NonFinite, "non-finite velocity at a cell face");
  }
  return v;
}

void check_cfl(const Grid1D& grid, const std::vector<double>& v, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParam, "dt must be positive", "dt");
  const double lam = dt / grid.h();
  double vmax = 0.0;
  for (double a : v) vmax = std::max(vmax, std::abs(a));
  if (vmax * lam > 0.9) {
    throw Error(ErrorKind::CflViolation,
                "dt * max|g| / h = " + format_double(vmax * lam) + " exceeds 0.9", "dt");
  }
  for (std::size_t i = 0; i < grid.n; ++i) {
    if (lam * (std::max(v[i + 1], 0.0) + std::max(-v[i], 0.0)) > 1.0) {
      throw Error(ErrorKind::CflViolation, "outflow Courant number exceeds 1 in a cell", "dt");
    }
  }
}

void check_rate_cfl(const Grid1D& grid, const Fn& q, double dt, const char* key) {
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double r = q(grid.center(i));
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Error(ErrorKind::InvalidParam, std::string(key) + " must be finite and nonnegative", key);
    }
    if (dt * r > 0.5) {
      throw Error(ErrorKind::CflViolation, std::string("dt * max ") + key + " exceeds 0.5", "dt");
    }
  }
}

void check_shape(const DensityGrid& f, const Grid1D& grid, std::size_t regimes) {
  if (!(f.grid == grid) || f.values.size() != regimes) {
    throw Error(ErrorKind::GridMismatch, "density does not match the solver grid");
  }
  for (const auto& v : f.values) {
    if (v.size() != grid.n) throw Error(ErrorKind::GridMismatch, "density has the wrong number of cells");
  }
}

/// One upwind step. Every new value is a nonnegative combination of old
/// values, so positivity holds exactly in floating point. Returns the mass
/// leaving through the two boundary faces.
double transport(std::vector<double>& u, const std::vector<double>& v, double lam, double h,
                 std::vector<double>& scratch) {
  const std::size_t n = u.size();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double keep = 1.0 - lam * (std::max(v[i + 1], 0.0) + std::max(-v[i], 0.0));
    double s = u[i] * keep;
    if (i > 0) s += lam * std::max(v[i], 0.0) * u[i - 1];
    if (i + 1 < n) s += lam * std::max(-v[i + 1], 0.0) * u[i + 1];
    scratch[i] = s;
  }
  const double out = lam * h * (std::max(-v[0], 0.0) * u[0] + std::max(v[n], 0.0) * u[n - 1]);
  u.swap(scratch);
  return out;
}

void record(DensityGrid& f, double outflow) {
  f.audit.outflow += outflow;
  ++f.audit.steps;
  const double m = f.mass();
  f.audit.max_defect = std::max(f.audit.max_defect, std::abs(m + f.audit.outflow - f.audit.initial_mass));
  for (const auto& v : f.values) {
    for (double a : v) f.audit.min_value = std::min(f.audit.min_value, a);
  }
  for (double a : f.age_bins) f.audit.min_value = std::min(f.audit.min_value, a);
}

template <class Step>
void run(DensityGrid& f, double t_end, double dt, Step step) {
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
  while (f.t < t_end - eps) {
    const double remaining = t_end - f.t;
    const double tau = remaining < dt + eps ? remaining : dt;
    step(f, tau);
    f.t = tau == remaining ? t_end : f.t + tau;
  }
}

}  // namespace

Grid1D::Grid1D(double lo, double hi, std::size_t cells, bool dyadic)
    : x_min(lo), x_max(hi), n(cells), dyadic_aligned(dyadic) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::InvalidParam, "grid requires x_min < x_max", "x_max");
  }
  if (n < 8) throw Error(ErrorKind::InvalidParam, "grid needs at least 8 cells", "n");
  if (dyadic && (lo != 0.0 || n % 2 != 0)) {
    throw Error(ErrorKind::GridNotDyadic, "dyadic grids need x_min = 0 and an even cell count", "n");
  }
}

DensityGrid::DensityGrid(Grid1D g, std::vector<std::vector<double>> v) : grid(g), values(std::move(v)) {
  for (const auto& r : values) {
    if (r.size() != grid.n) throw Error(ErrorKind::GridMismatch, "initial density has the wrong number of cells");
  }
  audit.initial_mass = mass();
  for (const auto& r : values) {
    for (double a : r) audit.min_value = std::min(audit.min_value, a);
  }
}

double DensityGrid::mass(std::size_t regime) const { return compensated_sum(values.at(regime)) * grid.h(); }

double DensityGrid::mass() const {
  double m = 0.0;
  for (std::size_t r = 0; r < values.size(); ++r) m += mass(r);
  return m;
}

std::vector<double> cell_averages(const Grid1D& grid, const Fn& f) {
  std::vector<double> out(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double a = grid.left(i), b = grid.left(i + 1);
    out[i] = boost::math::quadrature::gauss<double, 10>::integrate(f, a, b) / (b - a);
  }
  return out;
}

// --- Liouville ---------------------------------------------------------------

LiouvilleSolver::LiouvilleSolver(Grid1D grid, Fn g, double dt)
    : grid_(grid), face_v_(face_velocities(grid, g)), dt_(dt) {
  check_cfl(grid_, face_v_, dt_);
}

void LiouvilleSolver::advance(DensityGrid& f, double t_end) const {
  check_shape(f, grid_, 1);
  std::vector<double> scratch;
  const double h = grid_.h();
  run(f, t_end, dt_, [&](DensityGrid& d, double tau) {
    record(d, transport(d.values[0], face_v_, tau / h, h, scratch));
  });
}

DensityGrid evolve_liouville(const Grid1D& grid, const Fn& g, std::vector<double> f0, double t_end, double dt) {
  LiouvilleSolver s(grid, g, dt);
  DensityGrid f(grid, {std::move(f0)});
  s.advance(f, t_end);
  return f;
}

// --- switching ----------------------------------------------------------------

SwitchingSolver::SwitchingSolver(Grid1D grid, Fn g0, Fn g1, Fn q0, Fn q1, double dt)
    : grid_(grid), v0_(face_velocities(grid, g0)), v1_(face_velocities(grid, g1)), dt_(dt) {
  check_cfl(grid_, v0_, dt_);
  check_cfl(grid_, v1_, dt_);
  check_rate_cfl(grid_, q0, dt_, "q0");
  check_rate_cfl(grid_, q1, dt_, "q1");
  a_.resize(grid_.n);
  b_.resize(grid_.n);
  for (std::size_t i = 0; i < grid_.n; ++i) {
    a_[i] = q0(grid_.center(i));
    b_[i] = q1(grid_.center(i));
  }
}

void SwitchingSolver::advance(DensityGrid& f, double t_end) const {
  check_shape(f, grid_, 2);
  std::vector<double> scratch;
  const double h = grid_.h();
  run(f, t_end, dt_, [&](DensityGrid& d, double tau) {
    double out = transport(d.values[0], v0_, tau / h, h, scratch);
    out += transport(d.values[1], v1_, tau / h, h, scratch);
    auto& u0 = d.values[0];
    auto& u1 = d.values[1];
    for (std::size_t i = 0; i < grid_.n; ++i) {
      const double k = a_[i] + b_[i];
      if (k <= 0.0) continue;
      // Both components relax to their equilibrium split of the cell's mass.
      const double s = u0[i] + u1[i];
      const double e = std::exp(-k * tau);
      const double eq0 = s * b_[i] / k, eq1 = s * a_[i] / k;
      u0[i] = eq0 + (u0[i] - eq0) * e;
      u1[i] = eq1 + (u1[i] - eq1) * e;
    }
    record(d, out);
  });
}

DensityGrid evolve_switching(const Grid1D& grid, const Fn& g0, const Fn& g1, const Fn& q0, const Fn& q1,
                             std::vector<double> f0, std::vector<double> f1, double t_end, double dt) {
  SwitchingSolver s(grid, g0, g1, q0, q1, dt);
  DensityGrid f(grid, {std::move(f0), std::move(f1)});
  s.advance(f, t_end);
  return f;
}

// --- one-phase cell cycle ------------------------------------------------------

CellCycleSolver::CellCycleSolver(Grid1D grid, Fn g, Fn phi, double dt)
    : grid_(grid), face_v_(face_velocities(grid, g)), dt_(dt) {
  if (!grid_.dyadic_aligned) throw Error(ErrorKind::GridNotDyadic, "cell-cycle solver needs a dyadic grid");
  face_v_[0] = std::max(face_v_[0], 0.0);  // nothing enters or leaves through x = 0
  check_cfl(grid_, face_v_, dt_);
  check_rate_cfl(grid_, phi, dt_, "phi");
  survive_.resize(grid_.n);
  for (std::size_t i = 0; i < grid_.n; ++i) survive_[i] = phi(grid_.center(i));
}

void CellCycleSolver::advance(DensityGrid& f, double t_end) const {
  check_shape(f, grid_, 1);
  std::vector<double> scratch, next(grid_.n);
  const double h = grid_.h();
  run(f, t_end, dt_, [&](DensityGrid& d, double tau) {
    const double out = transport(d.values[0], face_v_, tau / h, h, scratch);
    auto& u = d.values[0];
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j < grid_.n; ++j) {
      const double keep = std::exp(-survive_[j] * tau);
      next[j] += u[j] * keep;
      // Both daughters of a cell in [jh, (j+1)h] land in cell j/2.
      next[j / 2] += u[j] * -std::expm1(-survive_[j] * tau);
    }
    u.swap(next);
    record(d, out);
  });
}

DensityGrid evolve_cell_cycle(const Grid1D& grid, const Fn& g, const Fn& phi, std::vector<double> f0,
                              double t_end, double dt) {
  CellCycleSolver s(grid, g, phi, dt);
  DensityGrid f(grid, {std::move(f0)});
  s.advance(f, t_end);
  return f;
}

// --- two-phase cell cycle -------------------------------------------------------

TwoPhaseSolver::TwoPhaseSolver(Grid1D x_grid, std::size_t ny, Fn g, Fn phi, double t_B, double dt)
    : grid_(x_grid), ny_(ny), t_B_(t_B), face_v_(face_velocities(x_grid, g)), dt_(dt) {
  if (!grid_.dyadic_aligned) throw Error(ErrorKind::GridNotDyadic, "two-phase solver needs a dyadic x grid");
  if (!(t_B_ > 0.0)) throw Error(ErrorKind::InvalidParam, "t_B must be positive", "t_B");
  if (ny_ == 0) throw Error(ErrorKind::InvalidParam, "ny must be positive", "ny");
  face_v_[0] = std::max(face_v_[0], 0.0);
  check_cfl(grid_, face_v_, dt_);
  check_rate_cfl(grid_, phi, dt_, "phi");
  const double per_cell = (t_B_ / static_cast<double>(ny_)) / dt_;
  const double rounded = std::round(per_cell);
  if (rounded < 1.0 || std::abs(per_cell - rounded) > 1e-9 * per_cell) {
    throw Error(ErrorKind::DtMisaligned, "y-cell width t_B/ny must be a whole number of steps dt", "dt");
  }
  bins_ = static_cast<std::size_t>(rounded) * ny_;
  survive_.resize(grid_.n);
  for (std::size_t i = 0; i < grid_.n; ++i) survive_[i] = phi(grid_.center(i));
}

namespace {

void refresh_phase_b(DensityGrid& d) {
  const std::size_t nx = d.grid.n, bins = d.age_bin_count, per = bins / d.ny;
  auto& marginal = d.values[1];
  std::fill(marginal.begin(), marginal.end(), 0.0);
  d.phase_b.assign(nx * d.ny, 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t j = 0; j < nx; ++j) {
      const double v = d.age_bins[k * nx + j];
      marginal[j] += v * d.age_bin_width;
      d.phase_b[j * d.ny + k / per] += v / static_cast<double>(per);
    }
  }
}

}  // namespace

DensityGrid TwoPhaseSolver::initial(std::vector<double> a, std::vector<double> b) const {
  if (a.size() != grid_.n || b.size() != grid_.n * ny_) {
    throw Error(ErrorKind::GridMismatch, "two-phase initial data has the wrong shape");
  }
  DensityGrid d(grid_, {std::move(a), std::vector<double>(grid_.n, 0.0)});
  d.ny = ny_;
  d.y_max = t_B_;
  d.age_bin_count = bins_;
  d.age_bin_width = dt_;
  d.age_bins.assign(bins_ * grid_.n, 0.0);
  const std::size_t per = bins_ / ny_;
  for (std::size_t k = 0; k < bins_; ++k) {
    for (std::size_t j = 0; j < grid_.n; ++j) d.age_bins[k * grid_.n + j] = b[j * ny_ + k / per];
  }
  refresh_phase_b(d);
  d.audit.initial_mass = d.mass();
  for (double v : d.age_bins) d.audit.min_value = std::min(d.audit.min_value, v);
  return d;
}

void TwoPhaseSolver::advance(DensityGrid& f, double t_end) const {
  check_shape(f, grid_, 2);
  if (f.age_bin_count != bins_ || f.age_bins.size() != bins_ * grid_.n) {
    throw Error(ErrorKind::GridMismatch, "density was not prepared by this two-phase solver");
  }
  const double steps = (t_end - f.t) / dt_;
  if (std::abs(steps - std::round(steps)) > 1e-6) {
    throw Error(ErrorKind::DtMisaligned, "two-phase runs must cover a whole number of steps", "t_end");
  }
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(std::max(0.0, steps)));
  const std::size_t nx = grid_.n;
  const double h = grid_.h(), lam = dt_ / h;
  std::vector<double> scratch, bin, next(nx);
  std::vector<double> keep(nx), enter(nx);
  for (std::size_t j = 0; j < nx; ++j) {
    keep[j] = std::exp(-survive_[j] * dt_);
    enter[j] = -std::expm1(-survive_[j] * dt_);
  }

  for (std::size_t s = 0; s < n_steps; ++s) {
    auto& a = f.values[0];
    double out = transport(a, face_v_, lam, h, scratch);
    for (std::size_t k = 0; k < bins_; ++k) {
      bin.assign(f.age_bins.begin() + static_cast<std::ptrdiff_t>(k * nx),
                 f.age_bins.begin() + static_cast<std::ptrdiff_t>((k + 1) * nx));
      out += transport(bin, face_v_, lam, h, scratch) * dt_;
      std::copy(bin.begin(), bin.end(), f.age_bins.begin() + static_cast<std::ptrdiff_t>(k * nx));
    }
    // Cells whose phase B ends divide; one daughter lands in cell j/2.
    std::fill(next.begin(), next.end(), 0.0);
    const std::size_t last = (bins_ - 1) * nx;
    for (std::size_t j = 0; j < nx; ++j) {
      next[j] += a[j] * keep[j];
      next[j / 2] += f.age_bins[last + j] * dt_;
    }
    std::copy_backward(f.age_bins.begin(), f.age_bins.begin() + static_cast<std::ptrdiff_t>(last),
                       f.age_bins.end());
    for (std::size_t j = 0; j < nx; ++j) f.age_bins[j] = a[j] * enter[j] / dt_;
    a.swap(next);
    refresh_phase_b(f);
    f.t += dt_;
    record(f, out);
  }
  f.t = n_steps > 0 ? t_end : f.t;
}

DensityGrid evolve_two_phase(const Grid1D& x_grid, std::size_t ny, const Fn& g, const Fn& phi, double t_B,
                             std::vector<double> a0, std::vector<double> b0, double t_end, double dt) {
  TwoPhaseSolver s(x_grid, ny, g, phi, t_B, dt);
  DensityGrid f = s.initial(std::move(a0), std::move(b0));
  s.advance(f, t_end);
  return f;
}

// --- steady state and output ------------------------------------------------------

double l1_difference(const DensityGrid& a, const DensityGrid& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) {
    throw Error(ErrorKind::GridMismatch, "densities live on different grids");
  }
  double s = 0.0;
  for (std::size_t r = 0; r < a.values.size(); ++r) {
    for (std::size_t i = 0; i < a.grid.n; ++i) s += std::abs(a.values[r][i] - b.values[r][i]);
  }
  return s * a.grid.h();
}

SteadyStateResult steady_state(const Evolver& evolver, DensityGrid f0, double tol, double t_max,
                               double check_interval) {
  if (!(check_interval > 0.0)) throw Error(ErrorKind::InvalidParam, "check interval must be positive");
  SteadyStateResult res{std::move(f0), false, std::numeric_limits<double>::infinity()};
  while (res.density.t < t_max) {
    const DensityGrid prev = res.density;
    const double target = std::min(t_max, res.density.t + check_interval);
    evolver.advance(res.density, target);
    const double span = res.density.t - prev.t;
    if (span <= 0.0) break;
    res.residual = l1_difference(res.density, prev) / span;
    if (res.residual < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

void write_csv(std::ostream& os, const DensityGrid& f, bool header) {
  if (header) os << "t,regime,cell_center,value\n";
  const std::string t = format_double(f.t);
  for (std::size_t r = 0; r < f.values.size(); ++r) {
    for (std::size_t i = 0; i < f.grid.n; ++i) {
      os << t << ',' << r << ',' << format_double(f.grid.center(i)) << ',' << format_double(f.values[r][i]) << '\n';
    }
  }
}

}  // namespace pdmp::density
