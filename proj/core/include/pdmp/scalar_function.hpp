#pragma once

#include <functional>
#include <string>

#include "pdmp/expression.hpp"

namespace pdmp {

/// Function of one real variable given as a constant, a parsed expression,
/// or arbitrary code. Constants are tracked so hazards built from them can
/// use exact exponential sampling.
class ScalarFunction {
 public:
  ScalarFunction(double constant);  // NOLINT(google-explicit-constructor)
  ScalarFunction(Expression expression);  // NOLINT(google-explicit-constructor)
  ScalarFunction(std::function<double(double)> f, std::string label);

  /// Parses `text`; a plain number becomes a constant.
  static ScalarFunction parse(const std::string& text);

  double operator()(double x) const { return constant_ ? value_ : f_(x); }

  bool is_constant() const { return constant_; }
  double constant_value() const { return value_; }
  const std::string& text() const { return text_; }

  /// Adapter usable where std::function<double(double)> is expected.
  std::function<double(double)> as_function() const;

 private:
  std::function<double(double)> f_;
  std::string text_;
  double value_ = 0.0;
  bool constant_ = false;
};

}  // namespace pdmp
