#include "pdmp/q_transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>


#include "pdmp/error.hpp"
#include "quadrature.hpp"

namespace pdmp {

namespace {

constexpr int kMaxDepth = 15;
constexpr double kQuadTol = 1e-12;

}  // namespace

QTransform::QTransform(Scalar g, Scalar phi) : g_(std::move(g)), phi_(std::move(phi)) {
  if (!g_ || !phi_) throw Error(ErrorKind::InvalidParam, "q_transform requires g and phi");
}

double QTransform::integrand(double r) const {
  const double g = g_(r);
  if (!(g > 0.0)) {
    throw Error(ErrorKind::InvalidParam, "growth rate must be positive, got " + std::to_string(g) +
                                             " at x=" + std::to_string(r), "g");
  }
  return phi_(r) / g;
}

double QTransform::increment(double a, double b) const {
  if (!(a >= 0.0) || !(b >= a)) throw Error(ErrorKind::InvalidParam, "increment requires 0 <= a <= b");
  if (a == b) return 0.0;
  if (a == 0.0) return (*this)(b);
  double err = 0.0;
  const double v = detail::adaptive_integral([this](double r) { return integrand(r); }, a, b, kQuadTol, kMaxDepth, &err);
  if (!std::isfinite(v)) throw Error(ErrorKind::QuadratureFailure, "non-finite phi/g integral");
  return v;
}

double QTransform::operator()(double x) const {
  if (!(x >= 0.0)) throw Error(ErrorKind::InvalidParam, "Q(x) requires x >= 0");
  if (x == 0.0) return 0.0;
  auto f = [this](double r) { return integrand(r); };
  double err = 0.0;
  const double direct = detail::adaptive_integral(f, 0.0, x, kQuadTol, kMaxDepth, &err);
  if (std::isfinite(direct) && err <= 1e-10 * std::max(1.0, std::abs(direct))) return direct;

  // Singular near 0: integrate decade by decade in log coordinates and
  // extrapolate the geometric tail, or report divergence.
  auto decade = [&](int k) {
    const double hi = std::log(x) - k * std::log(10.0);
    const double lo = hi - std::log(10.0);
    return detail::adaptive_integral([&](double u) { const double r = std::exp(u); return f(r) * r; }, lo, hi,
                                     kQuadTol, kMaxDepth);
  };
  constexpr int kDecades = 16;
  double total = 0.0;
  double prev = 0.0, last = 0.0;
  for (int k = 0; k < kDecades; ++k) {
    prev = last;
    last = decade(k);
    if (!std::isfinite(last)) break;
    total += last;
  }
  const double ratio = prev > 0.0 ? last / prev : 0.0;
  if (!std::isfinite(last) || !std::isfinite(total) || ratio >= 0.9) {
    throw Error(ErrorKind::DivergentIntegral,
                "integral of phi/g does not converge at 0 (decade ratio " + std::to_string(ratio) + ")");
  }
  return total + last * ratio / (1.0 - ratio);
}

double QTransform::advance(double from, double delta) const {
  if (!(from >= 0.0) || !(delta >= 0.0)) {
    throw Error(ErrorKind::InvalidParam, "advance requires from >= 0 and delta >= 0");
  }
  if (delta == 0.0) return from;

  // Bracket: F(z) = increment(from, z) - delta, F(lo) < 0 <= F(hi).
  double lo = from, f_lo = -delta;
  const double rate0 = from > 0.0 ? integrand(from) : 0.0;
  double step = rate0 > 0.0 ? delta / rate0 : std::max(1.0, from);
  double hi = lo + step, f_hi = f_lo + increment(lo, hi);
  while (f_hi < 0.0) {
    lo = hi;
    f_lo = f_hi;
    step *= 2.0;
    hi = lo + step;
    if (!std::isfinite(hi) || hi > 1e300) {
      throw Error(ErrorKind::DivergentIntegral, "phi/g is integrable at infinity; level never reached");
    }
    f_hi = f_lo + increment(lo, hi);
  }

  // Safeguarded Newton with derivative phi/g, bisection fallback.
  double c = hi, f_c = f_hi;
  for (int it = 0; it < 200; ++it) {
    if (f_c == 0.0) return c;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    const double d = integrand(c);
    double next = d > 0.0 ? c - f_c / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double f_next = f_lo + increment(lo, next);
    if (f_next < 0.0) {
      lo = next;
      f_lo = f_next;
    } else {
      hi = next;
      f_hi = f_next;
    }
    c = next;
    f_c = f_next;
    if (std::abs(f_c) <= 1e-14 * (1.0 + delta)) return c;
  }
  return hi;
}

double QTransform::inverse(double value) const {
  if (!(value >= 0.0)) throw Error(ErrorKind::InvalidParam, "Q^{-1} requires a nonnegative value");
  if (value == 0.0) return 0.0;
  double z = 1.0;
  double qz = (*this)(z);
  while (qz >= value) {
    z *= 0.5;
    if (z < 1e-300) return 0.0;
    qz = (*this)(z);
  }
  return advance(z, value - qz);
}

double q_transform(const QTransform::Scalar& g, const QTransform::Scalar& phi, double x) {
  return QTransform(g, phi)(x);
}

}  // namespace pdmp
