#pragma once

#include <memory>
#include <string>
#include <vector>

namespace pdmp {

/// Scalar arithmetic expression in one variable `x`, e.g. "1 + x" or
/// "0.5*exp(-x^2)". Supports + - * / ^, unary minus, parentheses, the
/// constants `pi` and `e`, and exp, log, sqrt, abs, sin, cos, tanh, min,
/// max, pow. Parse errors throw `Error(ConfigError)`.
class Expression {
 public:
  explicit Expression(std::string text);

  double operator()(double x) const { return eval(root_, x); }

  const std::string& text() const { return text_; }
  /// True when the expression does not reference `x`.
  bool is_constant() const { return constant_; }

  struct Node;

 private:
  double eval(int node, double x) const;

  std::string text_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
  bool constant_ = false;
};

}  // namespace pdmp
