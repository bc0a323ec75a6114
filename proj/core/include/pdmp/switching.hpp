#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdmp::switching {

using Fn = std::function<double(double)>;

/// Two-regime switching system on an interval (lower, upper). Between
/// switches x' = g_i(x); q_i(x) is the rate of leaving regime i. The two
/// velocity fields must have strictly opposite signs inside the interval.
struct SwitchingSystem1D {
  Fn g0, g1, q0, q1;
  double lower = 0.0;
  double upper = 1.0;
  std::optional<double> x_ref;  ///< base point of R; defaults to the midpoint
};

/// Throws InvalidParam if sampling finds the sign structure violated or a
/// non-positive intensity.
void validate(const SwitchingSystem1D& sys);

struct DensityOptions {
  double quad_tol = 1e-12;
  /// Tail decades near each end: eps = width * 10^-k for k in [first, last].
  int first_decade = 3;
  int last_decade = 8;
  /// |exponent| below this is the critical (log-divergent) case.
  double critical_band = 1e-4;
};

/// Tail behavior of the unnormalized density at one end of the interval.
struct EndpointTail {
  /// The mass within [eps/10, eps] of the end scales like eps^{-exponent}.
  /// Where both fields vanish linearly at the end this is r0.
  double exponent = 0.0;
  enum class Kind { Integrable, Divergent, Critical } kind = Kind::Integrable;
  double mass = 0.0;  ///< mass in (end, end + eps_first), extrapolated
};

/// f̄_i(x) = exp(-R(x)) / |g_i(x)| with R(x) = \int_{x_ref}^x (q0/g0 + q1/g1),
/// the nonnegative solution of the stationary forward system with zero net
/// flux, plus its normalization.
class StationaryDensity {
 public:
  StationaryDensity(SwitchingSystem1D sys, DensityOptions options = {});

  double R(double x) const;
  double unnormalized(int regime, double x) const;
  /// Normalized density; throws DivergentIntegral when alpha is infinite.
  double density(int regime, double x) const;
  /// \int_a^b of the normalized density of `regime`.
  double mass(int regime, double a, double b) const;

  double alpha() const { return alpha_; }
  bool normalizable() const { return std::isfinite(alpha_); }
  const EndpointTail& lower_tail() const { return lower_; }
  const EndpointTail& upper_tail() const { return upper_; }
  const SwitchingSystem1D& system() const { return sys_; }
  double x_ref() const { return x_ref_; }

 private:
  /// \int of q0/g0 + q1/g1 from x_ref toward one end, tabulated at panel
  /// edges uniform in log(distance to that end).
  struct RTable {
    double u_lo = 0.0;  ///< log distance of the outermost edge
    double du = 0.0;
    std::vector<double> cum;  ///< cum[k]: integral between edge k and x_ref
  };
  RTable build_table(bool at_lower) const;
  double integrand(bool at_lower, double u) const;
  double from_ref(bool at_lower, double u) const;
  /// Summed unnormalized density at distance e^u from one end, times e^u.
  double tail_integrand(bool at_lower, double u) const;
  EndpointTail analyze_tail(bool at_lower) const;

  SwitchingSystem1D sys_;
  DensityOptions opt_;
  double x_ref_;
  RTable left_, right_;
  EndpointTail lower_, upper_;
  double alpha_ = 0.0;
};

StationaryDensity stationary_density(const SwitchingSystem1D& sys, const DensityOptions& options = {});

enum class Verdict { Stable, Sweeping, Inconclusive };
std::string_view to_string(Verdict v);

/// Known derivatives of the velocity fields; missing ones are differenced.
struct Derivatives {
  std::optional<double> g0_lower, g1_lower, g0_upper, g1_upper;
};

struct ClassificationReport {
  double r0 = 0.0;  ///< NaN when the fields do not both vanish at `lower`
  bool r0_applicable = false;
  bool sign_premises = false;  ///< g0'(lower) and g1'(lower) have opposite signs
  double lambda_mean = 0.0;
  double alpha = 0.0;  ///< +inf when not normalizable
  Verdict verdict = Verdict::Inconclusive;
  double p0 = 0.5, p1 = 0.5;
  double divergence_exponent = 0.0;
  std::string note;
};

ClassificationReport classify(const SwitchingSystem1D& sys, const Derivatives& derivatives = {},
                              const DensityOptions& options = {});

/// JSON object with schema_version, r0, lambda_mean, alpha, verdict, p0, p1,
/// divergence_exponent. Non-finite numbers are written as null / "inf".
std::string to_json(const ClassificationReport& report);

/// Central difference with step 1e-6 * (1 + |x|), falling back to a
/// one-sided second-order formula when the left point is not finite.
double derivative(const Fn& f, double x);

}  // namespace pdmp::switching
