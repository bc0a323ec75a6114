#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pdmp/density.hpp"
#include "pdmp/process.hpp"

namespace pdmp::mc {

/// Cell counts per regime on a shared grid. `density` is normalized over the
/// in-range samples, so the sum over regimes and cells of density * h is 1.
/// Samples outside the grid are counted in `below` / `above`.
struct Histogram {
  density::Grid1D grid;
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::vector<double>> density;
  std::size_t sample_size = 0;  ///< all samples, in range or not
  std::size_t below = 0;
  std::size_t above = 0;

  std::size_t regimes() const { return counts.size(); }
  std::size_t in_range() const { return sample_size - below - above; }
  /// Fraction of in-range samples in `regime`.
  double mass(std::size_t regime) const;
};

/// Throws EmptySample if no sample falls inside the grid.
Histogram empirical_density(std::span<const double> samples, const density::Grid1D& grid);
/// Regime-resolved version; regimes[i] in [0, n_regimes).
Histogram empirical_density(std::span<const double> samples, std::span<const int> regimes, std::size_t n_regimes,
                            const density::Grid1D& grid);

/// sum over regimes and cells of |a - b| h. Throws GridMismatch.
double l1_distance(const Histogram& a, const Histogram& b);
double l1_distance(const Histogram& h, const density::DensityGrid& f);
/// Against per-regime density functions, compared through their cell averages.
double l1_distance(const Histogram& h, const std::vector<density::Fn>& f);

/// sup |F_N - F|. Throws EmptySample.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov tail probability P(sqrt(n) D > d sqrt(n)) with the
/// usual small-sample correction of the scale.
double ks_p_value(double statistic, double n_effective);
/// Asymptotic one-sample critical value c(level) / sqrt(n); 1.628 / sqrt(n) at 0.01.
double ks_critical_value(double n, double level = 0.01);
/// Two-sample critical value c(level) sqrt((n + m) / (n m)).
double ks_critical_value(double n, double m, double level);

struct SweepingPoint {
  double t = 0.0;
  std::size_t paths = 0;             ///< paths that reported a snapshot at t
  double total = 0.0;                ///< fraction with x <= eps
  std::vector<double> per_regime;    ///< fraction with x <= eps and the given regime
  std::vector<double> near_regime;   ///< regime frequencies among paths with x <= eps
  std::vector<double> regime_freq;   ///< regime frequencies over all paths
};

/// Fraction of paths with first state component <= eps at each requested
/// time. Paths without a snapshot at a time (failed paths) are skipped.
std::vector<SweepingPoint> sweeping_mass(const std::vector<std::vector<Snapshot>>& snapshots, double eps,
                                         const std::vector<double>& times, std::size_t n_regimes);
std::vector<SweepingPoint> sweeping_mass(const EnsembleResult& ensemble, double eps,
                                         const std::vector<double>& times, std::size_t n_regimes);

struct FitReport {
  double l1_distance = 0.0;
  double ks_statistic = -1.0;  ///< negative when not computed
  std::size_t sample_size = 0;
  std::size_t out_of_range = 0;
  double l1_threshold = 0.0;
  double ks_threshold = 0.0;
  bool pass_l1 = false;
  bool pass_ks = true;
  bool pass = false;
};

/// Fills the pass flags from the thresholds.
FitReport make_fit_report(double l1, double ks, std::size_t n, std::size_t out_of_range, double l1_threshold,
                          double ks_threshold);
std::string to_json(const FitReport& report);

/// CSV rows (cell_center, regime, density).
void write_csv(std::ostream& os, const Histogram& h, bool header = true);

/// Samples one state component at the fixed times t_from, t_from + delta,
/// ... up to t_to, flowing the segment start forward to each time.
class OccupationSampler : public PathObserver {
 public:
  OccupationSampler(std::size_t component, double t_from, double delta, double t_to);
  void on_segment(const PdmpModel& model, double t_start, double t_end, int regime, std::span<const double> start,
                  std::span<const double> end, bool last) override;

  std::vector<double>& values() { return values_; }
  std::vector<int>& regimes() { return regimes_; }

 private:
  std::size_t component_;
  double delta_, t_to_;
  double next_;
  std::size_t k_ = 0;
  double t_from_;
  std::vector<double> values_;
  std::vector<int> regimes_;
  State buf_;
};

struct OccupationOptions {
  std::size_t n_paths = 1;
  double horizon = 1.0;
  double burn_in_fraction = 0.5;  ///< share of each path's horizon discarded
  double delta = 1.0;             ///< sampling interval after burn-in
  std::size_t component = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  SimulationOptions simulation;
};

struct OccupationSample {
  std::vector<double> values;
  std::vector<int> regimes;
  std::size_t jumps = 0;
};

/// Pools fixed-interval samples after burn-in over independent paths.
OccupationSample occupation_samples(const PdmpModel& model, const InitialSampler& initial,
                                    const OccupationOptions& options);

}  // namespace pdmp::mc
