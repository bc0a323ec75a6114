#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

namespace pdmp::density {

using Fn = std::function<double(double)>;

/// Uniform cells on [x_min, x_max].
struct Grid1D {
  Grid1D(double x_min, double x_max, std::size_t n, bool dyadic_aligned = false);

  double x_min;
  double x_max;
  std::size_t n;
  bool dyadic_aligned;

  double h() const { return (x_max - x_min) / static_cast<double>(n); }
  double left(std::size_t i) const { return x_min + h() * static_cast<double>(i); }
  double center(std::size_t i) const { return x_min + h() * (static_cast<double>(i) + 0.5); }
  bool operator==(const Grid1D& o) const {
    return x_min == o.x_min && x_max == o.x_max && n == o.n;
  }
};

/// Running check of  mass + cumulative outflow = initial mass.
struct MassAudit {
  double initial_mass = 0.0;
  double outflow = 0.0;
  double max_defect = 0.0;
  double min_value = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
};

/// Cell averages per regime. The two-phase solver additionally keeps its
/// proliferating-phase density resolved by elapsed time in `age_bins`
/// (age-bin major, bins of width dt), exposes its x-marginal as regime 1
/// and its average over `ny` equal y cells in `phase_b`.
struct DensityGrid {
  Grid1D grid;
  std::vector<std::vector<double>> values;
  double t = 0.0;
  MassAudit audit;

  std::size_t ny = 0;
  double y_max = 0.0;
  std::vector<double> phase_b;
  std::size_t age_bin_count = 0;
  double age_bin_width = 0.0;
  std::vector<double> age_bins;

  DensityGrid(Grid1D g, std::vector<std::vector<double>> v);

  std::size_t regimes() const { return values.size(); }
  double mass(std::size_t regime) const;
  double mass() const;
};

/// Cell averages of a function, by 10-point Gauss quadrature per cell.
std::vector<double> cell_averages(const Grid1D& grid, const Fn& f);

/// Something that can push a density forward in time.
class Evolver {
 public:
  virtual ~Evolver() = default;
  /// Advances `f` from f.t to `t_end` in steps of dt (a shorter last step
  /// where the scheme allows it).
  virtual void advance(DensityGrid& f, double t_end) const = 0;
  virtual double dt() const = 0;
};

/// du/dt = -(g u)_x, first-order upwind with velocities at cell faces. Mass
/// leaves only through boundary faces where g points outward.
class LiouvilleSolver : public Evolver {
 public:
  LiouvilleSolver(Grid1D grid, Fn g, double dt);
  void advance(DensityGrid& f, double t_end) const override;
  double dt() const override { return dt_; }

 private:
  Grid1D grid_;
  std::vector<double> face_v_;
  double dt_;
};

/// Two transport equations coupled by switching: q0 is the rate 0 -> 1 and
/// q1 the rate 1 -> 0. Each step transports both regimes, then applies the
/// exact solution of the per-cell 2x2 exchange.
class SwitchingSolver : public Evolver {
 public:
  SwitchingSolver(Grid1D grid, Fn g0, Fn g1, Fn q0, Fn q1, double dt);
  void advance(DensityGrid& f, double t_end) const override;
  double dt() const override { return dt_; }

 private:
  Grid1D grid_;
  std::vector<double> v0_, v1_, a_, b_;
  double dt_;
};

/// Size density of a dividing cell line: transport by g, loss phi f, gain
/// 2 phi(2x) f(2x). On a dyadic grid the gain is an exact pairing of cell j
/// with cell j/2. Zero inflow at x = 0.
class CellCycleSolver : public Evolver {
 public:
  CellCycleSolver(Grid1D grid, Fn g, Fn phi, double dt);
  void advance(DensityGrid& f, double t_end) const override;
  double dt() const override { return dt_; }

 private:
  Grid1D grid_;
  std::vector<double> face_v_, survive_;
  double dt_;
};

/// Resting phase A (regime 0) and proliferating phase B of fixed duration
/// t_B. Phase B moves in y with unit speed, so with dt dividing the y-cell
/// width the y-advection is an exact shift of age bins.
class TwoPhaseSolver : public Evolver {
 public:
  TwoPhaseSolver(Grid1D x_grid, std::size_t ny, Fn g, Fn phi, double t_B, double dt);
  void advance(DensityGrid& f, double t_end) const override;
  double dt() const override { return dt_; }

  /// Density with phase A given by `a` and phase B by `b` (x cell major,
  /// ny y cells), ready for `advance`.
  DensityGrid initial(std::vector<double> a, std::vector<double> b) const;

 private:
  Grid1D grid_;
  std::size_t ny_;
  double t_B_;
  std::size_t bins_;
  std::vector<double> face_v_, survive_;
  double dt_;
};

DensityGrid evolve_liouville(const Grid1D& grid, const Fn& g, std::vector<double> f0, double t_end, double dt);
DensityGrid evolve_switching(const Grid1D& grid, const Fn& g0, const Fn& g1, const Fn& q0, const Fn& q1,
                             std::vector<double> f0, std::vector<double> f1, double t_end, double dt);
DensityGrid evolve_cell_cycle(const Grid1D& grid, const Fn& g, const Fn& phi, std::vector<double> f0,
                              double t_end, double dt);
DensityGrid evolve_two_phase(const Grid1D& x_grid, std::size_t ny, const Fn& g, const Fn& phi, double t_B,
                             std::vector<double> a0, std::vector<double> b0, double t_end, double dt);

struct SteadyStateResult {
  DensityGrid density;
  bool converged = false;
  double residual = 0.0;  ///< last ||f(t+D) - f(t)||_1 / D
};

/// Advances in chunks of `check_interval` until the L1 change per unit time
/// drops below `tol`, or `t_max` is reached.
SteadyStateResult steady_state(const Evolver& evolver, DensityGrid f0, double tol, double t_max,
                               double check_interval = 1.0);

/// Sum over regimes of sum_i |a_i - b_i| h. Throws GridMismatch.
double l1_difference(const DensityGrid& a, const DensityGrid& b);

/// CSV rows (t, regime, cell_center, value); `header` adds the column line.
void write_csv(std::ostream& os, const DensityGrid& f, bool header = true);

}  // namespace pdmp::density
