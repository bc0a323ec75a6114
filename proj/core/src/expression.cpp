#include "pdmp/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "pdmp/error.hpp"

namespace pdmp {

struct Expression::Node {
  enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call1, Call2 } op;
  double value = 0.0;
  int lhs = -1;
  int rhs = -1;
  double (*fn1)(double) = nullptr;
  double (*fn2)(double, double) = nullptr;
};

namespace {

using Node = Expression::Node;

double fn_exp(double a) { return std::exp(a); }
double fn_log(double a) { return std::log(a); }
double fn_sqrt(double a) { return std::sqrt(a); }
double fn_abs(double a) { return std::abs(a); }
double fn_sin(double a) { return std::sin(a); }
double fn_cos(double a) { return std::cos(a); }
double fn_tanh(double a) { return std::tanh(a); }
double fn_min(double a, double b) { return std::min(a, b); }
double fn_max(double a, double b) { return std::max(a, b); }
double fn_pow(double a, double b) { return std::pow(a, b); }

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  int parse(std::vector<Node>& out, bool& uses_x) {
    nodes_ = &out;
    int root = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character");
    uses_x = uses_x_;
    return root;
  }

 private:
  [[noreturn]] void fail(const char* what) const {
    throw Error(ErrorKind::ConfigError,
                std::string("cannot parse expression '") + s_ + "': " + what + " at offset " +
                    std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  int push(Node n) {
    nodes_->push_back(n);
    return static_cast<int>(nodes_->size()) - 1;
  }
  int binary(Node::Op op, int l, int r) {
    Node n{op};
    n.lhs = l;
    n.rhs = r;
    return push(n);
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) lhs = binary(Node::Op::Add, lhs, term());
      else if (accept('-')) lhs = binary(Node::Op::Sub, lhs, term());
      else return lhs;
    }
  }
  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) lhs = binary(Node::Op::Mul, lhs, unary());
      else if (accept('/')) lhs = binary(Node::Op::Div, lhs, unary());
      else return lhs;
    }
  }
  int unary() {
    if (accept('-')) {
      Node n{Node::Op::Neg};
      n.lhs = unary();
      return push(n);
    }
    if (accept('+')) return unary();
    return power();
  }
  int power() {
    int base = primary();
    // right associative; exponent may carry its own sign
    if (accept('^')) return binary(Node::Op::Pow, base, unary());
    return base;
  }
  int primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (accept('(')) {
      int inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail("unexpected character");
  }
  int number() {
    double v = 0.0;
    const char* first = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("bad number");
    pos_ += static_cast<std::size_t>(ptr - first);
    Node n{Node::Op::Num};
    n.value = v;
    return push(n);
  }
  int name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    if (id == "x") {
      uses_x_ = true;
      return push(Node{Node::Op::Var});
    }
    if (id == "pi" || id == "e") {
      Node n{Node::Op::Num};
      n.value = id == "pi" ? std::numbers::pi : std::numbers::e;
      return push(n);
    }
    static const std::pair<const char*, double (*)(double)> unary_fns[] = {
        {"exp", fn_exp}, {"log", fn_log}, {"sqrt", fn_sqrt}, {"abs", fn_abs},
        {"sin", fn_sin}, {"cos", fn_cos}, {"tanh", fn_tanh}};
    static const std::pair<const char*, double (*)(double, double)> binary_fns[] = {
        {"min", fn_min}, {"max", fn_max}, {"pow", fn_pow}};
    for (auto& [fname, f] : unary_fns) {
      if (id == fname) {
        if (!accept('(')) fail("expected '(' after function name");
        Node n{Node::Op::Call1};
        n.lhs = expr();
        n.fn1 = f;
        if (!accept(')')) fail("expected ')'");
        return push(n);
      }
    }
    for (auto& [fname, f] : binary_fns) {
      if (id == fname) {
        if (!accept('(')) fail("expected '(' after function name");
        Node n{Node::Op::Call2};
        n.lhs = expr();
        if (!accept(',')) fail("expected ','");
        n.rhs = expr();
        n.fn2 = f;
        if (!accept(')')) fail("expected ')'");
        return push(n);
      }
    }
    fail("unknown identifier");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::vector<Node>* nodes_ = nullptr;
  bool uses_x_ = false;
};

}  // namespace

Expression::Expression(std::string text) : text_(std::move(text)) {
  auto nodes = std::make_shared<std::vector<Node>>();
  bool uses_x = false;
  root_ = Parser(text_).parse(*nodes, uses_x);
  constant_ = !uses_x;
  nodes_ = std::move(nodes);
}

double Expression::eval(int i, double x) const {
  const Node& n = (*nodes_)[static_cast<std::size_t>(i)];
  switch (n.op) {
    case Node::Op::Num: return n.value;
    case Node::Op::Var: return x;
    case Node::Op::Neg: return -eval(n.lhs, x);
    case Node::Op::Add: return eval(n.lhs, x) + eval(n.rhs, x);
    case Node::Op::Sub: return eval(n.lhs, x) - eval(n.rhs, x);
    case Node::Op::Mul: return eval(n.lhs, x) * eval(n.rhs, x);
    case Node::Op::Div: return eval(n.lhs, x) / eval(n.rhs, x);
    case Node::Op::Pow: return std::pow(eval(n.lhs, x), eval(n.rhs, x));
    case Node::Op::Call1: return n.fn1(eval(n.lhs, x));
    case Node::Op::Call2: return n.fn2(eval(n.lhs, x), eval(n.rhs, x));
  }
  return 0.0;
}

}  // namespace pdmp
