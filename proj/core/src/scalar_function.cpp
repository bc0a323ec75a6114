#include "pdmp/scalar_function.hpp"

#include "pdmp/io.hpp"

namespace pdmp {

ScalarFunction::ScalarFunction(double constant)
    : text_(format_double(constant)), value_(constant), constant_(true) {}

ScalarFunction::ScalarFunction(Expression expression) : text_(expression.text()) {
  if (expression.is_constant()) {
    constant_ = true;
    value_ = expression(0.0);
  } else {
    f_ = [e = std::move(expression)](double x) { return e(x); };
  }
}

ScalarFunction::ScalarFunction(std::function<double(double)> f, std::string label)
    : f_(std::move(f)), text_(std::move(label)) {}

ScalarFunction ScalarFunction::parse(const std::string& text) { return ScalarFunction(Expression(text)); }

std::function<double(double)> ScalarFunction::as_function() const {
  if (constant_) return [v = value_](double) { return v; };
  return f_;
}

}  // namespace pdmp
