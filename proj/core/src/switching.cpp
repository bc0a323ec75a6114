#include "pdmp/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <nlohmann/json.hpp>

#include "pdmp/error.hpp"
#include "quadrature.hpp"

namespace pdmp::switching {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;
// Panel width of the R table in log(distance to the end).
constexpr double kPanel = 0.25;
constexpr double kTailTol = 1e-9;
constexpr unsigned kTailDepth = 8;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double integrate(F f, double a, double b, double tol) {
  return detail::adaptive_integral(f, a, b, tol);
}

}  // namespace

void validate(const SwitchingSystem1D& sys) {
  if (!sys.g0 || !sys.g1 || !sys.q0 || !sys.q1) {
    throw Error(ErrorKind::InvalidParam, "switching system requires g0, g1, q0, q1");
  }
  if (!(sys.lower < sys.upper) || !std::isfinite(sys.lower) || !std::isfinite(sys.upper)) {
    throw Error(ErrorKind::InvalidParam, "switching interval must satisfy lower < upper");
  }
  if (sys.x_ref && !(*sys.x_ref > sys.lower && *sys.x_ref < sys.upper)) {
    throw Error(ErrorKind::InvalidParam, "x_ref must lie inside the interval", "x_ref");
  }
  const double mid = 0.5 * (sys.lower + sys.upper);
  const double orient = sys.g0(mid) < 0.0 ? -1.0 : 1.0;
  constexpr int kSamples = 201;
  for (int i = 1; i < kSamples; ++i) {
    const double x = sys.lower + (sys.upper - sys.lower) * i / kSamples;
    const double a = sys.g0(x), b = sys.g1(x);
    if (!(orient * a > 0.0 && orient * b < 0.0)) {
      throw Error(ErrorKind::InvalidParam,
                  "g0 and g1 must have strictly opposite signs inside the interval (fails at x=" +
                      std::to_string(x) + ")");
    }
    const double r0 = sys.q0(x), r1 = sys.q1(x);
    if (!(r0 > 0.0 && std::isfinite(r0))) throw Error(ErrorKind::InvalidParam, "q0 must be positive and finite", "q0");
    if (!(r1 > 0.0 && std::isfinite(r1))) throw Error(ErrorKind::InvalidParam, "q1 must be positive and finite", "q1");
  }
}

StationaryDensity::StationaryDensity(SwitchingSystem1D sys, DensityOptions options)
    : sys_(std::move(sys)), opt_(options) {
  validate(sys_);
  if (opt_.first_decade >= opt_.last_decade - 1) {
    throw Error(ErrorKind::InvalidParam, "tail analysis needs at least two decades");
  }
  x_ref_ = sys_.x_ref.value_or(0.5 * (sys_.lower + sys_.upper));
  left_ = build_table(true);
  right_ = build_table(false);
  lower_ = analyze_tail(true);
  upper_ = analyze_tail(false);
  if (lower_.kind != EndpointTail::Kind::Integrable || upper_.kind != EndpointTail::Kind::Integrable) {
    alpha_ = kInf;
    return;
  }
  const double width = sys_.upper - sys_.lower;
  const double eps = width * std::pow(10.0, -opt_.first_decade);
  const double left = integrate([&](double u) { return tail_integrand(true, u); }, std::log(eps),
                                 std::log(x_ref_ - sys_.lower), opt_.quad_tol);
  const double right = integrate([&](double v) { return tail_integrand(false, v); }, std::log(eps),
                                  std::log(sys_.upper - x_ref_), opt_.quad_tol);
  alpha_ = left + right + lower_.mass + upper_.mass;
  if (!std::isfinite(alpha_) || !(alpha_ > 0.0)) {
    throw Error(ErrorKind::QuadratureFailure, "normalization integral is not a positive finite number");
  }
}

// With s = end -/+ e^u the 1/(s - end) behavior of the rates becomes bounded.
double StationaryDensity::integrand(bool at_lower, double u) const {
  const double e = std::exp(u);
  const double s = at_lower ? sys_.lower + e : sys_.upper - e;
  return (sys_.q0(s) / sys_.g0(s) + sys_.q1(s) / sys_.g1(s)) * e;
}

StationaryDensity::RTable StationaryDensity::build_table(bool at_lower) const {
  const double width = sys_.upper - sys_.lower;
  const double u_ref = std::log(at_lower ? x_ref_ - sys_.lower : sys_.upper - x_ref_);
  const double u_min = std::log(width) - (opt_.last_decade + 2) * std::log(10.0);
  RTable t;
  const auto panels = static_cast<std::size_t>(std::ceil((u_ref - u_min) / kPanel));
  t.du = (u_ref - u_min) / static_cast<double>(panels);
  t.u_lo = u_min;
  t.cum.assign(panels + 1, 0.0);
  auto f = [&](double u) { return integrand(at_lower, u); };
  for (std::size_t k = panels; k-- > 0;) {
    const double a = t.u_lo + t.du * static_cast<double>(k);
    t.cum[k] = t.cum[k + 1] + Gauss::integrate(f, a, a + t.du);
  }
  return t;
}

double StationaryDensity::from_ref(bool at_lower, double u) const {
  const RTable& t = at_lower ? left_ : right_;
  auto f = [&](double w) { return integrand(at_lower, w); };
  if (u < t.u_lo) return t.cum[0] + integrate(f, u, t.u_lo, opt_.quad_tol);
  const auto k = std::min(static_cast<std::size_t>((u - t.u_lo) / t.du), t.cum.size() - 2);
  const double edge = t.u_lo + t.du * static_cast<double>(k + 1);
  return t.cum[k + 1] + Gauss::integrate(f, u, edge);
}

double StationaryDensity::tail_integrand(bool at_lower, double u) const {
  const double e = std::exp(u);
  const double s = at_lower ? sys_.lower + e : sys_.upper - e;
  const double r = at_lower ? -from_ref(true, u) : from_ref(false, u);
  return std::exp(-r) * (1.0 / std::abs(sys_.g0(s)) + 1.0 / std::abs(sys_.g1(s))) * e;
}

double StationaryDensity::R(double x) const {
  if (!(x > sys_.lower && x < sys_.upper)) {
    throw Error(ErrorKind::InvalidParam, "R(x) requires x inside the open interval");
  }
  if (x == x_ref_) return 0.0;
  if (x < x_ref_) return -from_ref(true, std::log(x - sys_.lower));
  return from_ref(false, std::log(sys_.upper - x));
}

double StationaryDensity::unnormalized(int regime, double x) const {
  const double g = regime == 0 ? sys_.g0(x) : sys_.g1(x);
  return std::exp(-R(x)) / std::abs(g);
}

double StationaryDensity::density(int regime, double x) const {
  if (!normalizable()) throw Error(ErrorKind::DivergentIntegral, "stationary density is not normalizable");
  return unnormalized(regime, x) / alpha_;
}

double StationaryDensity::mass(int regime, double a, double b) const {
  if (!normalizable()) throw Error(ErrorKind::DivergentIntegral, "stationary density is not normalizable");
  a = std::max(a, sys_.lower);
  b = std::min(b, sys_.upper);
  if (!(a < b)) return 0.0;
  auto f = [&](double x) { return unnormalized(regime, x); };
  double v;
  if (a == sys_.lower || b == sys_.upper) {
    boost::math::quadrature::tanh_sinh<double> ts;
    v = ts.integrate(f, a, b, 1e-10);
  } else {
    v = integrate(f, a, b, opt_.quad_tol);
  }
  return v / alpha_;
}

EndpointTail StationaryDensity::analyze_tail(bool at_lower) const {
  const double width = sys_.upper - sys_.lower;
  auto piece = [&](int k) {
    const double hi = std::log(width) - k * std::log(10.0);
    const double lo = hi - std::log(10.0);
    // Deep pieces sit where x itself carries relative rounding of
    // eps / distance, so a tight tolerance cannot be met there.
    return detail::adaptive_integral([&](double u) { return tail_integrand(at_lower, u); }, lo, hi,
                                     std::max(opt_.quad_tol, kTailTol), kTailDepth);
  };

  EndpointTail tail;
  std::vector<double> d;
  for (int k = opt_.first_decade; k < opt_.last_decade; ++k) {
    const double v = piece(k);
    if (!std::isfinite(v)) {
      tail.kind = EndpointTail::Kind::Divergent;
      tail.exponent = kInf;
      tail.mass = kInf;
      return tail;
    }
    d.push_back(v);
  }
  const double deep = d.back(), prev = d[d.size() - 2];
  if (deep == 0.0) {
    tail.exponent = -kInf;
  } else if (prev == 0.0) {
    tail.exponent = kInf;
  } else {
    tail.exponent = std::log10(deep / prev);
  }
  if (tail.exponent > opt_.critical_band) {
    tail.kind = EndpointTail::Kind::Divergent;
    tail.mass = kInf;
  } else if (tail.exponent >= -opt_.critical_band) {
    tail.kind = EndpointTail::Kind::Critical;
    tail.mass = kInf;
  } else {
    tail.kind = EndpointTail::Kind::Integrable;
    double sum = 0.0;
    for (double v : d) sum += v;
    const double rho = std::pow(10.0, tail.exponent);
    tail.mass = sum + deep * rho / (1.0 - rho);
  }
  return tail;
}

StationaryDensity stationary_density(const SwitchingSystem1D& sys, const DensityOptions& options) {
  return StationaryDensity(sys, options);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Sweeping: return "Sweeping";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

double derivative(const Fn& f, double x) {
  const double h = 1e-6 * (1.0 + std::abs(x));
  const double fl = f(x - h), fr = f(x + h);
  if (std::isfinite(fl) && std::isfinite(fr)) return (fr - fl) / (2.0 * h);
  return (-3.0 * f(x) + 4.0 * fr - f(x + 2.0 * h)) / (2.0 * h);
}

ClassificationReport classify(const SwitchingSystem1D& sys, const Derivatives& derivatives,
                              const DensityOptions& options) {
  validate(sys);
  ClassificationReport rep;
  const double q0 = sys.q0(sys.lower), q1 = sys.q1(sys.lower);
  if (!(q0 > 0.0 && q1 > 0.0)) {
    throw Error(ErrorKind::InvalidParam, "intensities must be positive at the lower end");
  }
  rep.p0 = q1 / (q0 + q1);
  rep.p1 = q0 / (q0 + q1);
  const double d0 = derivatives.g0_lower.value_or(derivative(sys.g0, sys.lower));
  const double d1 = derivatives.g1_lower.value_or(derivative(sys.g1, sys.lower));
  rep.lambda_mean = rep.p0 * d0 + rep.p1 * d1;

  constexpr double kZero = 1e-12;
  rep.r0 = std::numeric_limits<double>::quiet_NaN();
  rep.r0_applicable = std::abs(sys.g0(sys.lower)) <= kZero && std::abs(sys.g1(sys.lower)) <= kZero;
  if (rep.r0_applicable) {
    if (std::abs(d0) <= kZero || std::abs(d1) <= kZero) {
      throw Error(ErrorKind::DerivativeDegenerate, "g0'(lower) and g1'(lower) must be nonzero");
    }
    // The upper end is regular only if the vanishing field has a simple root there.
    if (std::abs(sys.g1(sys.upper)) <= kZero) {
      const double du = derivatives.g1_upper.value_or(derivative(sys.g1, sys.upper));
      if (std::abs(du) <= kZero) throw Error(ErrorKind::DerivativeDegenerate, "g1'(upper) must be nonzero");
    }
    if (std::abs(sys.g0(sys.upper)) <= kZero) {
      const double du = derivatives.g0_upper.value_or(derivative(sys.g0, sys.upper));
      if (std::abs(du) <= kZero) throw Error(ErrorKind::DerivativeDegenerate, "g0'(upper) must be nonzero");
    }
    rep.r0 = q0 / d0 + q1 / d1;
    rep.sign_premises = (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0);
  }

  const StationaryDensity dens(sys, options);
  rep.alpha = dens.alpha();
  rep.divergence_exponent = dens.lower_tail().exponent;

  Verdict numeric = Verdict::Inconclusive;
  const bool critical = dens.lower_tail().kind == EndpointTail::Kind::Critical ||
                        dens.upper_tail().kind == EndpointTail::Kind::Critical;
  if (dens.normalizable()) numeric = Verdict::Stable;
  else if (!critical) numeric = Verdict::Sweeping;
  else rep.note = "tail decays at the critical rate";

  rep.verdict = numeric;
  if (rep.r0_applicable) {
    if (std::abs(rep.r0) <= 1e-9) {
      rep.verdict = Verdict::Inconclusive;
      rep.note = "r0 vanishes within 1e-9";
    } else if (rep.sign_premises) {
      const Verdict by_sign = rep.r0 < 0.0 ? Verdict::Stable : Verdict::Sweeping;
      if (by_sign != numeric) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = "sign of r0 disagrees with the integrability test";
      }
    }
  }
  return rep;
}

std::string to_json(const ClassificationReport& report) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
  };
  nlohmann::json j;
  j["schema_version"] = 1;
  j["r0"] = num(report.r0);
  j["lambda_mean"] = num(report.lambda_mean);
  j["alpha"] = num(report.alpha);
  j["verdict"] = std::string(to_string(report.verdict));
  j["p0"] = report.p0;
  j["p1"] = report.p1;
  j["divergence_exponent"] = num(report.divergence_exponent);
  if (!report.note.empty()) j["note"] = report.note;
  return j.dump(2);
}

}  // namespace pdmp::switching
