#pragma once

#include <functional>

namespace pdmp {

/// Q(x) = \int_0^x phi(r) / g(r) dr for a positive growth rate g and a
/// nonnegative division intensity phi. Q is nondecreasing, and Q^{-1} maps
/// an Exp(1)-distributed increment of Q to the size at which a cell started
/// at `from` enters division.
class QTransform {
 public:
  using Scalar = std::function<double(double)>;

  QTransform(Scalar g, Scalar phi);

  /// Q(x). Throws DivergentIntegral when the integral does not converge at 0.
  double operator()(double x) const;
  /// \int_a^b phi / g for 0 < a <= b.
  double increment(double a, double b) const;
  /// Smallest y >= from with increment(from, y) = delta.
  double advance(double from, double delta) const;
  /// Q^{-1}(value).
  double inverse(double value) const;

 private:
  double integrand(double r) const;

  Scalar g_;
  Scalar phi_;
};

double q_transform(const QTransform::Scalar& g, const QTransform::Scalar& phi, double x);

}  // namespace pdmp
