#pragma once

// Test-side reference computations. Nothing here calls into the library, so
// a check against these is independent of the code under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Classical fixed-step RK4 for x' = g(x) in one dimension.
inline double rk4(const std::function<double(double)>& g, double x, double t, int steps = 20000) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = g(x), k2 = g(x + 0.5 * h * k1), k3 = g(x + 0.5 * h * k2), k4 = g(x + h * k3);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

/// sup |F_n - F| computed directly from the sorted sample.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Asymptotic one-sample Kolmogorov critical value at level 0.01.
inline double ks_critical_001(double n) { return 1.6276 / std::sqrt(n); }

/// Two-sample version at level 0.01.
inline double ks_critical_001(double n, double m) { return 1.6276 * std::sqrt((n + m) / (n * m)); }

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double stderr_mean = 0.0;
};

inline Moments moments(const std::vector<double>& v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.variance = ss / (n - 1.0);
  m.stderr_mean = std::sqrt(m.variance / n);
  return m;
}

/// Telegraph position at time t from x = 0 with speed c, simulated on a fixed
/// time step with Bernoulli(lambda dt) reversals.
inline double telegraph_fine_step(std::mt19937_64& gen, double lambda, double c, double t, double dt = 1e-3) {
  std::bernoulli_distribution flip(lambda * dt);
  std::bernoulli_distribution sign(0.5);
  double x = 0.0, v = sign(gen) ? c : -c;
  const auto steps = static_cast<long>(std::llround(t / dt));
  for (long i = 0; i < steps; ++i) {
    x += v * dt;
    if (flip(gen)) v = -v;
  }
  return x;
}

/// Gene model with P = mu = q0 = q1 = 1: stationary densities on (0, 1).
inline double gene_f0(double x) { return 1.0 - x; }
inline double gene_f1(double x) { return x; }

}  // namespace oracle
