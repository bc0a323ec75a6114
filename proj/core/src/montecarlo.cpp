#include "pdmp/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <nlohmann/json.hpp>

#include "pdmp/error.hpp"
#include "pdmp/io.hpp"

namespace pdmp::mc {

namespace {

void require_same_grid(const density::Grid1D& a, const density::Grid1D& b, std::size_t ra, std::size_t rb) {
  if (!(a == b) || ra != rb) throw Error(ErrorKind::GridMismatch, "histograms live on different grids");
}

/// Kolmogorov c(level) with P(K > c) = level, from the leading term of the tail series.
double kolmogorov_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidParam, "KS level must lie in (0, 1)", "level");
  return std::sqrt(-0.5 * std::log(0.5 * level));
}

}  // namespace

double Histogram::mass(std::size_t regime) const {
  const std::size_t n = in_range();
  if (n == 0) return 0.0;
  std::size_t c = 0;
  for (std::size_t v : counts.at(regime)) c += v;
  return static_cast<double>(c) / static_cast<double>(n);
}

Histogram empirical_density(std::span<const double> samples, const density::Grid1D& grid) {
  const std::vector<int> regimes(samples.size(), 0);
  return empirical_density(samples, regimes, 1, grid);
}

Histogram empirical_density(std::span<const double> samples, std::span<const int> regimes, std::size_t n_regimes,
                            const density::Grid1D& grid) {
  if (regimes.size() != samples.size()) {
    throw Error(ErrorKind::InvalidParam, "one regime label per sample is required", "regimes");
  }
  if (n_regimes == 0) throw Error(ErrorKind::InvalidParam, "at least one regime is required", "regimes");
  Histogram h{grid, std::vector<std::vector<std::size_t>>(n_regimes, std::vector<std::size_t>(grid.n, 0)), {},
              samples.size()};
  const double width = grid.h();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    const int r = regimes[i];
    if (r < 0 || static_cast<std::size_t>(r) >= n_regimes) {
      throw Error(ErrorKind::InvalidParam, "sample regime out of range", "regimes");
    }
    if (std::isnan(x) || x < grid.x_min) {
      ++h.below;
      continue;
    }
    if (x > grid.x_max) {
      ++h.above;
      continue;
    }
    auto cell = static_cast<std::size_t>((x - grid.x_min) / width);
    if (cell >= grid.n) cell = grid.n - 1;  // x == x_max
    ++h.counts[static_cast<std::size_t>(r)][cell];
  }
  const std::size_t n = h.in_range();
  if (n == 0) throw Error(ErrorKind::EmptySample, "no sample falls inside the histogram grid");
  const double scale = 1.0 / (static_cast<double>(n) * width);
  h.density.resize(n_regimes);
  for (std::size_t r = 0; r < n_regimes; ++r) {
    h.density[r].resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) h.density[r][i] = static_cast<double>(h.counts[r][i]) * scale;
  }
  return h;
}

double l1_distance(const Histogram& a, const Histogram& b) {
  require_same_grid(a.grid, b.grid, a.regimes(), b.regimes());
  double s = 0.0;
  for (std::size_t r = 0; r < a.regimes(); ++r) {
    for (std::size_t i = 0; i < a.grid.n; ++i) s += std::abs(a.density[r][i] - b.density[r][i]);
  }
  return s * a.grid.h();
}

double l1_distance(const Histogram& h, const density::DensityGrid& f) {
  require_same_grid(h.grid, f.grid, h.regimes(), f.regimes());
  double s = 0.0;
  for (std::size_t r = 0; r < h.regimes(); ++r) {
    for (std::size_t i = 0; i < h.grid.n; ++i) s += std::abs(h.density[r][i] - f.values[r][i]);
  }
  return s * h.grid.h();
}

double l1_distance(const Histogram& h, const std::vector<density::Fn>& f) {
  if (f.size() != h.regimes()) throw Error(ErrorKind::GridMismatch, "one density function per regime is required");
  double s = 0.0;
  for (std::size_t r = 0; r < h.regimes(); ++r) {
    const auto avg = density::cell_averages(h.grid, f[r]);
    for (std::size_t i = 0; i < h.grid.n; ++i) s += std::abs(h.density[r][i] - avg[i]);
  }
  return s * h.grid.h();
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(ErrorKind::EmptySample, "KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    // Ties: only the last copy of a value carries the full jump of F_N.
    const double F = std::clamp(cdf(samples[i]), 0.0, 1.0);
    d = std::max(d, F - static_cast<double>(i) / n);
    if (i + 1 == samples.size() || samples[i + 1] != samples[i]) {
      d = std::max(d, static_cast<double>(i + 1) / n - F);
    }
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySample, "KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_p_value(double statistic, double n_effective) {
  const double sn = std::sqrt(n_effective);
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_critical_value(double n, double level) { return kolmogorov_quantile(level) / std::sqrt(n); }

double ks_critical_value(double n, double m, double level) {
  return kolmogorov_quantile(level) * std::sqrt((n + m) / (n * m));
}

std::vector<SweepingPoint> sweeping_mass(const std::vector<std::vector<Snapshot>>& snapshots, double eps,
                                         const std::vector<double>& times, std::size_t n_regimes) {
  std::vector<SweepingPoint> out;
  out.reserve(times.size());
  for (double t : times) {
    SweepingPoint p;
    p.t = t;
    std::vector<std::size_t> near(n_regimes, 0), all(n_regimes, 0);
    std::size_t near_total = 0;
    for (const auto& path : snapshots) {
      auto it = std::find_if(path.begin(), path.end(), [t](const Snapshot& s) { return s.t == t; });
      if (it == path.end() || it->x.empty()) continue;
      const auto r = static_cast<std::size_t>(it->regime);
      if (r >= n_regimes) throw Error(ErrorKind::InvalidParam, "snapshot regime out of range", "regimes");
      ++p.paths;
      ++all[r];
      if (it->x[0] <= eps) {
        ++near[r];
        ++near_total;
      }
    }
    const double n = static_cast<double>(p.paths);
    p.total = p.paths ? static_cast<double>(near_total) / n : 0.0;
    p.per_regime.resize(n_regimes);
    p.near_regime.resize(n_regimes);
    p.regime_freq.resize(n_regimes);
    for (std::size_t r = 0; r < n_regimes; ++r) {
      p.per_regime[r] = p.paths ? static_cast<double>(near[r]) / n : 0.0;
      p.regime_freq[r] = p.paths ? static_cast<double>(all[r]) / n : 0.0;
      p.near_regime[r] = near_total ? static_cast<double>(near[r]) / static_cast<double>(near_total) : 0.0;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SweepingPoint> sweeping_mass(const EnsembleResult& ensemble, double eps,
                                         const std::vector<double>& times, std::size_t n_regimes) {
  std::vector<std::vector<Snapshot>> snaps;
  snaps.reserve(ensemble.paths.size());
  for (const auto& p : ensemble.paths) {
    if (p.error.empty()) snaps.push_back(p.snapshots);
  }
  return sweeping_mass(snaps, eps, times, n_regimes);
}

FitReport make_fit_report(double l1, double ks, std::size_t n, std::size_t out_of_range, double l1_threshold,
                          double ks_threshold) {
  FitReport r;
  r.l1_distance = l1;
  r.ks_statistic = ks;
  r.sample_size = n;
  r.out_of_range = out_of_range;
  r.l1_threshold = l1_threshold;
  r.ks_threshold = ks_threshold;
  r.pass_l1 = l1 < l1_threshold;
  r.pass_ks = ks < 0.0 || ks < ks_threshold;
  r.pass = r.pass_l1 && r.pass_ks;
  return r;
}

std::string to_json(const FitReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["l1_distance"] = r.l1_distance;
  if (r.ks_statistic >= 0.0) j["ks_statistic"] = r.ks_statistic;
  else j["ks_statistic"] = nullptr;
  j["sample_size"] = r.sample_size;
  j["out_of_range"] = r.out_of_range;
  j["l1_threshold"] = r.l1_threshold;
  j["ks_threshold"] = r.ks_threshold;
  j["pass_l1"] = r.pass_l1;
  j["pass_ks"] = r.pass_ks;
  j["pass"] = r.pass;
  return j.dump(2) + "\n";
}

void write_csv(std::ostream& os, const Histogram& h, bool header) {
  if (header) os << "cell_center,regime,density\n";
  for (std::size_t r = 0; r < h.regimes(); ++r) {
    for (std::size_t i = 0; i < h.grid.n; ++i) {
      os << format_double(h.grid.center(i)) << ',' << r << ',' << format_double(h.density[r][i]) << '\n';
    }
  }
}

OccupationSampler::OccupationSampler(std::size_t component, double t_from, double delta, double t_to)
    : component_(component), delta_(delta), t_to_(t_to), next_(t_from), t_from_(t_from) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidParam, "sampling interval must be positive", "delta");
}

void OccupationSampler::on_segment(const PdmpModel& model, double t_start, double t_end, int regime,
                                   std::span<const double> start, std::span<const double>, bool last) {
  while (next_ <= t_to_ && (next_ < t_end || (last && next_ <= t_end))) {
    if (next_ >= t_start) {
      const Flow& flow = model.regime(regime).flow;
      double v;
      if (next_ == t_start || flow.is_frozen()) {
        v = start[component_];
      } else {
        buf_ = flow_evolve(flow, start, next_ - t_start, model.tolerances());
        v = buf_[component_];
      }
      values_.push_back(v);
      regimes_.push_back(regime);
    }
    next_ = t_from_ + static_cast<double>(++k_) * delta_;
  }
}

OccupationSample occupation_samples(const PdmpModel& model, const InitialSampler& initial,
                                    const OccupationOptions& o) {
  if (!(o.horizon > 0.0)) throw Error(ErrorKind::InvalidParam, "horizon must be positive", "horizon");
  if (!(o.burn_in_fraction >= 0.0 && o.burn_in_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidParam, "burn-in fraction must lie in [0, 1)", "burn_in");
  }
  if (o.component >= model.dimension()) throw Error(ErrorKind::InvalidParam, "state component out of range");
  std::vector<OccupationSample> parts(o.n_paths);
  std::vector<std::exception_ptr> errors(o.n_paths);
  parallel_for(o.n_paths, o.threads, [&](std::size_t i) {
    try {
      Rng rng = Rng::for_stream(o.seed, i);
      const ProcessState init = initial(rng);
      OccupationSampler sampler(o.component, o.burn_in_fraction * o.horizon, o.delta, o.horizon);
      const PathSummary s = simulate_path(model, init, o.horizon, rng, sampler, o.simulation);
      parts[i].values = std::move(sampler.values());
      parts[i].regimes = std::move(sampler.regimes());
      parts[i].jumps = s.jumps;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  OccupationSample out;
  for (std::size_t i = 0; i < o.n_paths; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.values.insert(out.values.end(), parts[i].values.begin(), parts[i].values.end());
    out.regimes.insert(out.regimes.end(), parts[i].regimes.begin(), parts[i].regimes.end());
    out.jumps += parts[i].jumps;
  }
  return out;
}

}  // namespace pdmp::mc
