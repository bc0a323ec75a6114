#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pdmp::detail {

/// Adaptive 31-point Gauss-Kronrod on [a, b] with relative tolerance `tol`.
/// The integral is mapped onto [0, 1] first: Boost 1.74 compares the error of
/// the unscaled reference integral against a scaled tolerance, so short
/// intervals would otherwise always recurse to max_depth.
template <class F>
double adaptive_integral(F f, double a, double b, double tol, unsigned max_depth = 15, double* error = nullptr) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double w = b - a;
  double err = 0.0;
  const double v = GK::integrate([&](double t) { return f(a + w * t); }, 0.0, 1.0, max_depth, tol, &err);
  if (error) *error = err * (w < 0.0 ? -w : w);
  return v * w;
}

}  // namespace pdmp::detail
