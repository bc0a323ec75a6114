#include "pdmp/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "pdmp/error.hpp"
#include "pdmp/io.hpp"
#include "pdmp/q_transform.hpp"
#include "quadrature.hpp"

namespace pdmp::models {

namespace {


void require(bool ok, std::string_view model, std::string_view constraint, std::string key = {}) {
  if (!ok) throw_invalid_param(model, constraint, std::move(key));
}

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

/// Samples f on n+1 evenly spaced points of [lo, hi] and checks `pred`.
template <class Pred>
bool holds_on(const ScalarFunction& f, double lo, double hi, Pred pred, int n = 200) {
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    if (!pred(f(x))) return false;
  }
  return true;
}

/// Sampled maximum over [lo, hi] with a 1% margin, used as a thinning bound.
double sampled_bound(const ScalarFunction& f, double lo, double hi) {
  double m = 0.0;
  for (int i = 0; i <= 2000; ++i) m = std::max(m, f(lo + (hi - lo) * i / 2000.0));
  return 1.01 * m;
}

Hazard hazard_of(const ScalarFunction& f, std::optional<double> bound = std::nullopt) {
  if (f.is_constant()) return Hazard::constant(f.constant_value());
  return Hazard([f](std::span<const double> x) { return f(x[0]); }, bound);
}

std::string trimmed(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

/// x' = g(x) on x > 0, with closed forms for the constant and g(x) = x cases.
Flow growth_flow(const ScalarFunction& g) {
  Flow f(1, [g](std::span<const double> x, std::span<double> d) { d[0] = g(x[0]); });
  if (g.is_constant()) {
    const double c = g.constant_value();
    f.with_closed_form([c](double t, std::span<const double> x0, std::span<double> out) { out[0] = x0[0] + c * t; });
  } else if (trimmed(g.text()) == "x") {
    f.with_closed_form(
        [](double t, std::span<const double> x0, std::span<double> out) { out[0] = x0[0] * std::exp(t); });
  }
  f.with_domain([](std::span<const double> x) { return x[0] > 0.0; });
  return f;
}

/// Decides whether \int^infty f diverges from increments over doubling
/// intervals far out: geometric decay means the tail is summable.
bool tail_diverges(const std::function<double(double)>& f) {
  double prev = 0.0, last = 0.0;
  for (int k = 10; k < 20; ++k) {
    prev = last;
    const double a = std::ldexp(1.0, k), b = std::ldexp(1.0, k + 1);
    last = detail::adaptive_integral(f, a, b, 1e-8, 10);
    if (!std::isfinite(last)) return true;
  }
  if (last <= 0.0) return false;
  return prev <= 0.0 || last / prev >= 0.9;
}

void validate_cell_cycle(std::string_view model, const ScalarFunction& g, const ScalarFunction& phi) {
  for (int i = -120; i <= 120; ++i) {
    const double x = std::pow(10.0, i / 20.0);
    require(positive_finite(g(x)), model, "g > 0 on (0, inf)", "g");
    const double p = phi(x);
    require(p >= 0.0 && std::isfinite(p), model, "phi >= 0", "phi");
  }
  try {
    (void)QTransform(g.as_function(), phi.as_function())(1.0);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DivergentIntegral) throw;
    throw_invalid_param(model, "phi/g locally integrable at 0", "phi");
  }
  require(tail_diverges([&](double r) { return 1.0 / g(r); }), model, "integral of 1/g diverges at infinity", "g");
  require(tail_diverges([&](double r) { return phi(r) / g(r); }), model, "integral of phi/g diverges at infinity",
          "phi");
}

JumpOutcome outcome(State s, int regime, const char* kind) { return JumpOutcome{std::move(s), regime, kind}; }

}  // namespace

double JumpLaw::draw(Rng& rng) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::TwoPoint: return rng.bernoulli(0.5) ? a : -a;
    case Kind::Normal: return rng.normal(a, b);
    case Kind::Uniform: return rng.uniform(a, b);
  }
  return 0.0;
}

std::string JumpLaw::describe() const {
  switch (kind) {
    case Kind::Zero: return "Y = 0";
    case Kind::TwoPoint: return "Y = +-" + format_double(a);
    case Kind::Normal: return "Y ~ N(" + format_double(a) + ", " + format_double(b) + "^2)";
    case Kind::Uniform: return "Y ~ U(" + format_double(a) + ", " + format_double(b) + ")";
  }
  return {};
}

double logistic_flow(double r, double c, double x0, double t) {
  const double e = r == 0.0 ? t : -std::expm1(-r * t) / r;
  return x0 / (std::exp(-r * t) + c * x0 * e);
}

PdmpModel make_grasshopper(const GrasshopperParams& p) {
  constexpr const char* kName = "grasshopper";
  require(positive_finite(p.lambda), kName, "lambda > 0", "lambda");
  if (p.jump.kind == JumpLaw::Kind::Normal) require(p.jump.b >= 0.0, kName, "jump sd >= 0", "jump_sd");
  if (p.jump.kind == JumpLaw::Kind::Uniform) require(p.jump.a <= p.jump.b, kName, "jump_lo <= jump_hi", "jump_lo");
  const JumpLaw law = p.jump;
  Regime r{"free",
           Flow::frozen(1),
           {{kJump, Hazard::constant(p.lambda),
             {[law](std::span<const double> x, int, Rng& rng) {
                return outcome({x[0] + law.draw(rng)}, 0, kJump);
              },
              "x -> x + Y, " + law.describe()}}},
           {}};
  return PdmpModel(kName, 1, {std::move(r)}, {{"lambda", p.lambda}});
}

PdmpModel make_telegraph(const TelegraphParams& p) {
  constexpr const char* kName = "telegraph";
  require(positive_finite(p.lambda), kName, "lambda > 0", "lambda");
  require(positive_finite(p.c), kName, "c > 0", "c");
  Flow flow(2, [](std::span<const double> x, std::span<double> d) {
    d[0] = x[1];
    d[1] = 0.0;
  });
  flow.with_closed_form([](double t, std::span<const double> x0, std::span<double> out) {
        out[0] = x0[0] + x0[1] * t;
        out[1] = x0[1];
      })
      .with_jacobian([](std::span<const double>, std::span<double> j) {
        j[0] = 0.0;
        j[1] = 1.0;
        j[2] = 0.0;
        j[3] = 0.0;
      });
  Regime r{"moving",
           std::move(flow),
           {{kFlip, Hazard::constant(p.lambda),
             {[](std::span<const double> x, int, Rng&) { return outcome({x[0], -x[1]}, 0, kFlip); },
              "(x, v) -> (x, -v)"}}},
           {}};
  return PdmpModel(kName, 2, {std::move(r)}, {{"lambda", p.lambda}, {"c", p.c}});
}

PdmpModel make_cell_cycle_one_phase(const OnePhaseCellCycleParams& p) {
  constexpr const char* kName = "cell_cycle_1p";
  validate_cell_cycle(kName, p.g, p.phi);
  Regime r{"growing",
           growth_flow(p.g),
           {{kDivide, hazard_of(p.phi),
             {[](std::span<const double> x, int, Rng&) { return outcome({0.5 * x[0]}, 0, kDivide); },
              "x -> x/2"}}},
           {}};
  return PdmpModel(kName, 1, {std::move(r)}, {{"g", p.g.text()}, {"phi", p.phi.text()}});
}

PdmpModel make_rubinow(const RubinowParams& p) {
  constexpr const char* kName = "rubinow";
  require(positive_finite(p.m), kName, "m > 0", "m");
  require(holds_on(p.g, p.m, 2.0 * p.m, positive_finite), kName, "g > 0 on [m, 2m]", "g");
  const double m = p.m;
  Regime r{"growing",
           growth_flow(p.g),
           {},
           {{kDivide, BoundaryHit{[m](std::span<const double> x) { return x[0] - 2.0 * m; }},
             {[m](std::span<const double>, int, Rng&) { return outcome({m}, 0, kDivide); }, "x -> m"}}}};
  return PdmpModel(kName, 1, {std::move(r)}, {{"g", p.g.text()}, {"m", p.m}});
}

PdmpModel make_two_phase_cell_cycle(const TwoPhaseCellCycleParams& p) {
  constexpr const char* kName = "cell_cycle_2p";
  require(positive_finite(p.t_B), kName, "t_B > 0", "t_B");
  validate_cell_cycle(kName, p.g, p.phi);

  auto phase_flow = [&p](double y_speed) {
    const Flow size = growth_flow(p.g);
    Flow f(2, [g = p.g, y_speed](std::span<const double> x, std::span<double> d) {
      d[0] = g(x[0]);
      d[1] = y_speed;
    });
    if (size.has_closed_form()) {
      f.with_closed_form([size, y_speed](double t, std::span<const double> x0, std::span<double> out) {
        size.closed_form(t, x0.first(1), out.first(1));
        out[1] = x0[1] + y_speed * t;
      });
    }
    f.with_domain([](std::span<const double> x) { return x[0] > 0.0; });
    return f;
  };

  const ScalarFunction phi = p.phi;
  Hazard entry = phi.is_constant() ? Hazard::constant(phi.constant_value())
                                   : Hazard([phi](std::span<const double> x) { return phi(x[0]); });
  Regime resting{"A",
                 phase_flow(0.0),
                 {{kEnterB, std::move(entry),
                   {[](std::span<const double> x, int, Rng&) { return outcome({x[0], 0.0}, 1, kEnterB); },
                    "(x, A) -> (x, 0, B)"}}},
                 {}};
  Regime proliferating{"B",
                       phase_flow(1.0),
                       {},
                       {{kDivide, FixedDelay{p.t_B},
                         {[](std::span<const double> x, int, Rng&) { return outcome({0.5 * x[0], 0.0}, 0, kDivide); },
                          "(x, y, B) -> (x/2, 0, A)"}}}};
  return PdmpModel(kName, 2, {std::move(resting), std::move(proliferating)},
                   {{"g", p.g.text()}, {"phi", p.phi.text()}, {"t_B", p.t_B}});
}

PdmpModel make_gene_expression(const GeneExpressionParams& p) {
  constexpr const char* kName = "gene_expression";
  require(positive_finite(p.P), kName, "P > 0", "P");
  require(positive_finite(p.mu), kName, "mu > 0", "mu");
  const double top = p.P / p.mu;
  require(holds_on(p.q0, 0.0, top, positive_finite), kName, "q0 positive and bounded on [0, P/mu]", "q0");
  require(holds_on(p.q1, 0.0, top, positive_finite), kName, "q1 positive and bounded on [0, P/mu]", "q1");
  const double mu = p.mu, P = p.P;

  Flow inactive(1, [mu](std::span<const double> x, std::span<double> d) { d[0] = -mu * x[0]; });
  inactive
      .with_closed_form([mu](double t, std::span<const double> x0, std::span<double> out) {
        out[0] = x0[0] * std::exp(-mu * t);
      })
      .with_jacobian([mu](std::span<const double>, std::span<double> j) { j[0] = -mu; });
  Flow active(1, [mu, P](std::span<const double> x, std::span<double> d) { d[0] = P - mu * x[0]; });
  active
      .with_closed_form([mu, P](double t, std::span<const double> x0, std::span<double> out) {
        const double eq = P / mu;
        out[0] = eq + (x0[0] - eq) * std::exp(-mu * t);
      })
      .with_jacobian([mu](std::span<const double>, std::span<double> j) { j[0] = -mu; });

  Regime r0{"inactive",
            std::move(inactive),
            {{kSwitch, hazard_of(p.q0, sampled_bound(p.q0, 0.0, top)),
              {[](std::span<const double> x, int, Rng&) { return outcome({x[0]}, 1, kSwitch); }, "(x, 0) -> (x, 1)"}}},
            {}};
  Regime r1{"active",
            std::move(active),
            {{kSwitch, hazard_of(p.q1, sampled_bound(p.q1, 0.0, top)),
              {[](std::span<const double> x, int, Rng&) { return outcome({x[0]}, 0, kSwitch); }, "(x, 1) -> (x, 0)"}}},
            {}};
  return PdmpModel(kName, 1, {std::move(r0), std::move(r1)},
                   {{"P", p.P}, {"mu", p.mu}, {"q0", p.q0.text()}, {"q1", p.q1.text()}});
}

PdmpModel make_stein(const SteinParams& p) {
  constexpr const char* kName = "stein";
  require(positive_finite(p.alpha), kName, "alpha > 0", "alpha");
  require(p.a_E >= 0.0 && std::isfinite(p.a_E), kName, "a_E >= 0", "a_E");
  require(p.a_I >= 0.0 && std::isfinite(p.a_I), kName, "a_I >= 0", "a_I");
  require(positive_finite(p.lambda_E), kName, "lambda_E > 0", "lambda_E");
  require(p.lambda_I >= 0.0 && std::isfinite(p.lambda_I), kName, "lambda_I >= 0", "lambda_I");
  require(positive_finite(p.theta), kName, "theta > 0", "theta");
  require(positive_finite(p.t_R), kName, "t_R > 0", "t_R");
  const double alpha = p.alpha, a_E = p.a_E, a_I = p.a_I, theta = p.theta;

  auto decay = [alpha](double y_speed) {
    Flow f(2, [alpha, y_speed](std::span<const double> x, std::span<double> d) {
      d[0] = -alpha * x[0];
      d[1] = y_speed;
    });
    f.with_closed_form([alpha, y_speed](double t, std::span<const double> x0, std::span<double> out) {
      out[0] = x0[0] * std::exp(-alpha * t);
      out[1] = x0[1] + y_speed * t;
    });
    return f;
  };

  std::vector<HazardTransition> inputs;
  inputs.push_back({kExcite, Hazard::constant(p.lambda_E),
                    {[a_E, theta](std::span<const double> x, int, Rng&) {
                       if (x[0] >= theta - a_E) return outcome({0.0, 0.0}, 1, kFire);
                       return outcome({x[0] + a_E, 0.0}, 0, kExcite);
                     },
                     "V -> V + a_E below threshold, otherwise fire"}});
  if (p.lambda_I > 0.0) {
    inputs.push_back({kInhibit, Hazard::constant(p.lambda_I),
                      {[a_I](std::span<const double> x, int, Rng&) { return outcome({x[0] - a_I, 0.0}, 0, kInhibit); },
                       "V -> V - a_I"}});
  }
  Regime sub{"subthreshold", decay(0.0), std::move(inputs), {}};
  Regime refractory{"refractory",
                    decay(1.0),
                    {},
                    {{kRecover, FixedDelay{p.t_R},
                      {[](std::span<const double>, int, Rng&) { return outcome({0.0, 0.0}, 0, kRecover); },
                       "(0, t_R, B) -> (0, 0, A)"}}}};
  return PdmpModel(kName, 2, {std::move(sub), std::move(refractory)},
                   {{"alpha", p.alpha},
                    {"a_E", p.a_E},
                    {"a_I", p.a_I},
                    {"lambda_E", p.lambda_E},
                    {"lambda_I", p.lambda_I},
                    {"theta", p.theta},
                    {"t_R", p.t_R}});
}

std::pair<double, double> allee_equilibria(const AlleeParams& p) {
  auto h = [&p](double x) { return 1.0 - x / p.K - p.A / (1.0 + p.B * x); };
  // h is concave on x > 0 with its maximum where (1 + Bx)^2 = A B K.
  const double peak = std::max(0.0, (std::sqrt(p.A * p.B * p.K) - 1.0) / p.B);
  if (!(h(peak) > 0.0) || !(h(0.0) < 0.0) || !(h(p.K) < 0.0)) {
    throw Error(ErrorKind::NoInteriorRoots, "Allee field has no pair of interior equilibria");
  }
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t it = 200;
  auto r1 = boost::math::tools::toms748_solve(h, 0.0, peak, tol, it);
  it = 200;
  auto r2 = boost::math::tools::toms748_solve(h, peak, p.K, tol, it);
  return {0.5 * (r1.first + r1.second), 0.5 * (r2.first + r2.second)};
}

PdmpModel make_allee(const AlleeParams& p) {
  constexpr const char* kName = "allee";
  require(positive_finite(p.lambda), kName, "lambda > 0", "lambda");
  require(positive_finite(p.K), kName, "K > 0", "K");
  require(positive_finite(p.A), kName, "A > 0", "A");
  require(positive_finite(p.B), kName, "B > 0", "B");
  require(p.K * p.B > 1.0, kName, "K*B > 1", "B");
  require(p.A > 1.0 && p.A < (p.B * p.K + 1.0) * (p.B * p.K + 1.0) / (4.0 * p.K * p.B), kName,
          "1 < A < (BK+1)^2/(4KB)", "A");
  const auto [x1, x2] = allee_equilibria(p);
  require(holds_on(p.q01, 0.0, p.K, positive_finite), kName, "q01 positive and bounded on [0, K]", "q01");
  require(holds_on(p.q10, 0.0, p.K, positive_finite), kName, "q10 positive and bounded on [0, K]", "q10");

  const double lambda = p.lambda, K = p.K, A = p.A, B = p.B;
  Flow logistic(1, [lambda, K](std::span<const double> x, std::span<double> d) {
    d[0] = lambda * (1.0 - x[0] / K) * x[0];
  });
  logistic
      .with_closed_form([lambda, K](double t, std::span<const double> x0, std::span<double> out) {
        out[0] = logistic_flow(lambda, lambda / K, x0[0], t);
      })
      .with_jacobian([lambda, K](std::span<const double> x, std::span<double> j) {
        j[0] = lambda * (1.0 - 2.0 * x[0] / K);
      });
  Flow allee(1, [lambda, K, A, B](std::span<const double> x, std::span<double> d) {
    d[0] = lambda * (1.0 - x[0] / K - A / (1.0 + B * x[0])) * x[0];
  });
  allee.with_jacobian([lambda, K, A, B](std::span<const double> x, std::span<double> j) {
    const double s = 1.0 + B * x[0];
    j[0] = lambda * (1.0 - 2.0 * x[0] / K - A / (s * s));
  });

  Regime r0{"logistic",
            std::move(logistic),
            {{kSwitch, hazard_of(p.q01),
              {[](std::span<const double> x, int, Rng&) { return outcome({x[0]}, 1, kSwitch); }, "(x, 0) -> (x, 1)"}}},
            {}};
  Regime r1{"allee",
            std::move(allee),
            {{kSwitch, hazard_of(p.q10),
              {[](std::span<const double> x, int, Rng&) { return outcome({x[0]}, 0, kSwitch); }, "(x, 1) -> (x, 0)"}}},
            {}};
  return PdmpModel(kName, 1, {std::move(r0), std::move(r1)},
                   {{"lambda", p.lambda},
                    {"K", p.K},
                    {"A", p.A},
                    {"B", p.B},
                    {"q01", p.q01.text()},
                    {"q10", p.q10.text()},
                    {"x1", x1},
                    {"x2", x2}});
}

PdmpModel make_birth_switch(const BirthSwitchParams& p) {
  constexpr const char* kName = "birth_switch";
  for (auto [v, key] : {std::pair{p.b0, "b0"}, std::pair{p.b1, "b1"}, std::pair{p.mu, "mu"}}) {
    require(std::isfinite(v), kName, "finite rates", key);
  }
  require(p.b0 < p.mu, kName, "b0 < mu", "b0");
  require(p.mu < p.b1, kName, "mu < b1", "b1");
  require(positive_finite(p.c), kName, "c > 0", "c");
  const double a = (p.b1 - p.mu) / p.c;
  require(holds_on(p.q0, 0.0, a, positive_finite), kName, "q0 positive and bounded on [0, a]", "q0");
  require(holds_on(p.q1, 0.0, a, positive_finite), kName, "q1 positive and bounded on [0, a]", "q1");

  auto regime_flow = [c = p.c](double r) {
    Flow f(1, [r, c](std::span<const double> x, std::span<double> d) { d[0] = r * x[0] - c * x[0] * x[0]; });
    f.with_closed_form([r, c](double t, std::span<const double> x0, std::span<double> out) {
       out[0] = logistic_flow(r, c, x0[0], t);
     }).with_jacobian([r, c](std::span<const double> x, std::span<double> j) { j[0] = r - 2.0 * c * x[0]; });
    return f;
  };
  Regime r0{"low_birth",
            regime_flow(p.b0 - p.mu),
            {{kSwitch, hazard_of(p.q0),
              {[](std::span<const double> x, int, Rng&) { return outcome({x[0]}, 1, kSwitch); }, "(x, 0) -> (x, 1)"}}},
            {}};
  Regime r1{"high_birth",
            regime_flow(p.b1 - p.mu),
            {{kSwitch, hazard_of(p.q1),
              {[](std::span<const double> x, int, Rng&) { return outcome({x[0]}, 0, kSwitch); }, "(x, 1) -> (x, 0)"}}},
            {}};
  return PdmpModel(kName, 1, {std::move(r0), std::move(r1)},
                   {{"b0", p.b0},
                    {"b1", p.b1},
                    {"c", p.c},
                    {"mu", p.mu},
                    {"q0", p.q0.text()},
                    {"q1", p.q1.text()}});
}

switching::SwitchingSystem1D switching_system(const GeneExpressionParams& p) {
  const double mu = p.mu, P = p.P;
  switching::SwitchingSystem1D s;
  s.g0 = [mu](double x) { return -mu * x; };
  s.g1 = [mu, P](double x) { return P - mu * x; };
  s.q0 = p.q0.as_function();
  s.q1 = p.q1.as_function();
  s.lower = 0.0;
  s.upper = P / mu;
  return s;
}

switching::SwitchingSystem1D switching_system(const BirthSwitchParams& p) {
  const double r0 = p.b0 - p.mu, r1 = p.b1 - p.mu, c = p.c;
  switching::SwitchingSystem1D s;
  s.g0 = [r0, c](double x) { return r0 * x - c * x * x; };
  s.g1 = [r1, c](double x) { return r1 * x - c * x * x; };
  s.q0 = p.q0.as_function();
  s.q1 = p.q1.as_function();
  s.lower = 0.0;
  s.upper = r1 / c;
  return s;
}

switching::SwitchingSystem1D switching_system(const AlleeParams& p) {
  const auto [x1, x2] = allee_equilibria(p);
  (void)x1;
  const double lambda = p.lambda, K = p.K, A = p.A, B = p.B;
  switching::SwitchingSystem1D s;
  s.g0 = [lambda, K](double x) { return lambda * (1.0 - x / K) * x; };
  s.g1 = [lambda, K, A, B](double x) { return lambda * (1.0 - x / K - A / (1.0 + B * x)) * x; };
  s.q0 = p.q01.as_function();
  s.q1 = p.q10.as_function();
  s.lower = x2;
  s.upper = K;
  return s;
}

switching::Derivatives switching_derivatives(const BirthSwitchParams& p) {
  switching::Derivatives d;
  d.g0_lower = p.b0 - p.mu;
  d.g1_lower = p.b1 - p.mu;
  d.g1_upper = -(p.b1 - p.mu);
  return d;
}

}  // namespace pdmp::models
