#include "pdmp/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdmp/error.hpp"
#include "pdmp/ode.hpp"

namespace pdmp {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

/// Smallest t in (lo, hi] with crossed(t), assuming !crossed(lo) && crossed(hi).
template <class Pred>
double bisect(Pred crossed, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (crossed(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

/// The flow state, optionally augmented with cumulative hazards, advanced by
/// accepted integrator steps. When the flow has a closed form and the state
/// does not need to be integrated for step control, only the cumulative
/// hazards are integrated and x(t) comes from the closed form.
class AugmentedPath {
 public:
  AugmentedPath(const Flow& flow, std::span<const double> x0, std::vector<const Hazard*> rates,
                bool integrate_x, const FlowTolerances& tol)
      : flow_(flow),
        x0_(x0.begin(), x0.end()),
        rates_(std::move(rates)),
        use_closed_(flow.has_closed_form()),
        offset_(integrate_x || !flow.has_closed_form() ? flow.dimension() : 0),
        tol_(tol),
        scratch_(flow.dimension()),
        stepper_(make_system(), initial(), 0.0, ode::Tolerance{tol.rel, tol.abs}) {}

  void step(double t_limit) {
    stepper_.step(t_limit);
    if (!flow_.has_domain()) return;
    state_at(stepper_.current_time(), probe_);
    if (flow_.in_domain(probe_)) return;
    const double t_exit = bisect(
        [this](double t) {
          state_at(t, probe_);
          return !flow_.in_domain(probe_);
        },
        stepper_.previous_time(), stepper_.current_time(), tol_.event);
    state_at(t_exit, probe_);
    throw DomainExit(t_exit, probe_);
  }

  double previous_time() const { return stepper_.previous_time(); }
  double current_time() const { return stepper_.current_time(); }

  void state_at(double t, State& out) {
    out.resize(flow_.dimension());
    if (use_closed_) {
      flow_.closed_form(t, x0_, out);
      return;
    }
    stepper_.state_at(t, buffer_);
    std::copy_n(buffer_.begin(), flow_.dimension(), out.begin());
  }

  double cumulative(double t, std::size_t k) {
    stepper_.state_at(t, buffer_);
    return buffer_[offset_ + k];
  }
  double cumulative_now(std::size_t k) const { return stepper_.current_state()[offset_ + k]; }

 private:
  ode::StateVec initial() const {
    ode::StateVec y(offset_ + rates_.size(), 0.0);
    std::copy_n(x0_.begin(), offset_, y.begin());
    return y;
  }

  ode::System make_system() {
    return [this](const ode::StateVec& y, ode::StateVec& dy, double t) {
      std::span<const double> x;
      if (use_closed_) {
        flow_.closed_form(t, x0_, scratch_);
        x = scratch_;
      } else {
        x = std::span<const double>(y.data(), flow_.dimension());
      }
      if (offset_ > 0) {
        flow_.rhs(std::span<const double>(y.data(), offset_), std::span<double>(dy.data(), offset_));
      }
      for (std::size_t k = 0; k < rates_.size(); ++k) dy[offset_ + k] = rates_[k]->rate(x);
    };
  }

  const Flow& flow_;
  State x0_;
  std::vector<const Hazard*> rates_;
  bool use_closed_;
  std::size_t offset_;
  FlowTolerances tol_;
  State scratch_;
  ode::StateVec buffer_;
  State probe_;
  ode::DenseStepper stepper_;
};

void check_dimension(const Flow& flow, std::span<const double> x0) {
  if (x0.size() != flow.dimension()) {
    throw Error(ErrorKind::InvalidParam, "state dimension " + std::to_string(x0.size()) +
                                             " does not match flow dimension " +
                                             std::to_string(flow.dimension()));
  }
  if (!all_finite(x0)) throw Error(ErrorKind::NonFinite, "non-finite initial state");
}

bool is_stationary(const Flow& flow, std::span<const double> x0) {
  const State g = flow.rhs(x0);
  return std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
}

}  // namespace

Flow::Flow(std::size_t dimension, VectorField rhs) : dim_(dimension), rhs_(std::move(rhs)) {
  if (dim_ == 0) throw Error(ErrorKind::InvalidParam, "flow dimension must be positive");
  if (!rhs_) throw Error(ErrorKind::InvalidParam, "flow requires a vector field");
}

Flow Flow::frozen(std::size_t dimension) {
  Flow f(dimension, [](std::span<const double>, std::span<double> d) {
    std::fill(d.begin(), d.end(), 0.0);
  });
  f.closed_form_ = [](double, std::span<const double> x0, std::span<double> out) {
    std::copy(x0.begin(), x0.end(), out.begin());
  };
  f.jacobian_ = [](std::span<const double>, std::span<double> jac) {
    std::fill(jac.begin(), jac.end(), 0.0);
  };
  f.frozen_ = true;
  return f;
}

Flow& Flow::with_closed_form(ClosedForm closed_form) {
  closed_form_ = std::move(closed_form);
  return *this;
}

Flow& Flow::with_jacobian(Jacobian jacobian) {
  jacobian_ = std::move(jacobian);
  return *this;
}

Flow& Flow::with_domain(DomainTest inside) {
  domain_ = std::move(inside);
  return *this;
}

State Flow::rhs(std::span<const double> x) const {
  State out(dim_);
  rhs_(x, out);
  return out;
}

void Flow::jacobian(std::span<const double> x, std::span<double> jac) const {
  if (jacobian_) {
    jacobian_(x, jac);
    return;
  }
  State xp(x.begin(), x.end()), xm(x.begin(), x.end()), gp(dim_), gm(dim_);
  for (std::size_t k = 0; k < dim_; ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x[k]));
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    rhs_(xp, gp);
    rhs_(xm, gm);
    for (std::size_t i = 0; i < dim_; ++i) jac[i * dim_ + k] = (gp[i] - gm[i]) / (2.0 * h);
    xp[k] = x[k];
    xm[k] = x[k];
  }
}

Hazard::Hazard(ScalarField rate, std::optional<double> upper_bound)
    : rate_(std::move(rate)), upper_bound_(upper_bound) {
  if (!rate_) throw Error(ErrorKind::InvalidParam, "hazard requires a rate function");
  if (upper_bound_ && !(*upper_bound_ >= 0.0 && std::isfinite(*upper_bound_))) {
    throw Error(ErrorKind::InvalidParam, "hazard upper bound must be finite and nonnegative");
  }
}

Hazard Hazard::constant(double rate) {
  if (!(rate >= 0.0 && std::isfinite(rate))) {
    throw Error(ErrorKind::InvalidParam, "constant hazard rate must be finite and nonnegative");
  }
  Hazard h([rate](std::span<const double>) { return rate; }, rate);
  h.constant_ = rate;
  return h;
}

State flow_evolve(const Flow& flow, std::span<const double> x0, double t,
                  const FlowTolerances& tol) {
  check_dimension(flow, x0);
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidParam, "flow_evolve requires t >= 0");
  if (t == 0.0 || flow.is_frozen()) return State(x0.begin(), x0.end());
  if (flow.has_closed_form()) {
    State out(flow.dimension());
    flow.closed_form(t, x0, out);
    if (!all_finite(out)) throw Error(ErrorKind::NonFinite, "closed-form flow produced non-finite values");
    if (!flow.in_domain(out)) {
      State probe(flow.dimension());
      const double t_exit = bisect(
          [&](double s) {
            flow.closed_form(s, x0, probe);
            return !flow.in_domain(probe);
          },
          0.0, t, tol.event);
      flow.closed_form(t_exit, x0, probe);
      throw DomainExit(t_exit, probe);
    }
    return out;
  }
  AugmentedPath path(flow, x0, {}, true, tol);
  while (path.current_time() < t) path.step(t);
  State out;
  path.state_at(t, out);
  return out;
}

double hazard_integral(const Flow& flow, const Hazard& hazard, std::span<const double> x0, double t,
                       const FlowTolerances& tol) {
  check_dimension(flow, x0);
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidParam, "hazard_integral requires t >= 0");
  if (t == 0.0) return 0.0;
  if (auto c = hazard.constant_rate()) return *c * t;
  if (flow.is_frozen()) return hazard.rate(x0) * t;
  AugmentedPath path(flow, x0, {&hazard}, false, tol);
  while (path.current_time() < t) path.step(t);
  return path.cumulative_now(0);
}

Passage first_passage(const Flow& flow, std::span<const double> x0,
                      std::span<const Hazard* const> hazards, std::span<const double> levels,
                      std::span<const ScalarField* const> boundaries, double t_limit,
                      const FlowTolerances& tol) {
  check_dimension(flow, x0);
  if (hazards.size() != levels.size()) {
    throw Error(ErrorKind::InvalidParam, "first_passage needs one level per hazard");
  }
  if (!(t_limit >= 0.0)) throw Error(ErrorKind::InvalidParam, "first_passage requires t_limit >= 0");

  Passage best;
  best.time = t_limit;

  // Hazards that are constant along this flow fire at level / rate exactly.
  std::vector<std::size_t> numeric;
  for (std::size_t j = 0; j < hazards.size(); ++j) {
    std::optional<double> c = hazards[j]->constant_rate();
    if (!c && flow.is_frozen()) c = hazards[j]->rate(x0);
    if (!c) {
      numeric.push_back(j);
      continue;
    }
    if (*c > 0.0) {
      const double tj = levels[j] / *c;
      if (tj < best.time || (tj == best.time && best.cause == Passage::Cause::TimeLimit)) {
        best.cause = Passage::Cause::Hazard;
        best.index = j;
        best.time = tj;
      }
    }
  }
  // A frozen state never changes the sign of a boundary function.
  std::vector<std::size_t> active_boundaries;
  if (!flow.is_frozen()) {
    for (std::size_t b = 0; b < boundaries.size(); ++b) active_boundaries.push_back(b);
  }

  if (numeric.empty() && active_boundaries.empty()) {
    best.state = flow_evolve(flow, x0, best.time, tol);
    return best;
  }
  // Trap: the state is stationary and no varying hazard accumulates.
  if (is_stationary(flow, x0) &&
      std::all_of(numeric.begin(), numeric.end(), [&](std::size_t j) { return hazards[j]->rate(x0) == 0.0; })) {
    best.state.assign(x0.begin(), x0.end());
    return best;
  }

  std::vector<const Hazard*> rates;
  for (std::size_t j : numeric) rates.push_back(hazards[j]);
  AugmentedPath path(flow, x0, std::move(rates), !active_boundaries.empty(), tol);

  std::vector<double> h_prev(boundaries.size(), 0.0);
  for (std::size_t b : active_boundaries) h_prev[b] = (*boundaries[b])(x0);

  const double t_stop = best.time;
  State x;
  for (;;) {
    path.step(t_stop);
    const double t0 = path.previous_time();
    const double t1 = path.current_time();

    double cand = std::numeric_limits<double>::infinity();
    Passage::Cause cand_cause = Passage::Cause::TimeLimit;
    std::size_t cand_index = 0;

    if (!active_boundaries.empty()) path.state_at(t1, x);
    for (std::size_t b : active_boundaries) {
      const ScalarField& h = *boundaries[b];
      const double h1 = h(x);
      const double h0 = h_prev[b];
      if (h0 != 0.0 && (h1 == 0.0 || (h1 > 0.0) != (h0 > 0.0))) {
        const double s = h0 > 0.0 ? 1.0 : -1.0;
        State probe;
        const double tb = bisect(
            [&](double t) {
              path.state_at(t, probe);
              return s * h(probe) <= 0.0;
            },
            t0, t1, tol.event);
        if (tb < cand) {
          cand = tb;
          cand_cause = Passage::Cause::Boundary;
          cand_index = b;
        }
      }
      if (h1 != 0.0) h_prev[b] = h1;
    }
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      const double level = levels[numeric[k]];
      if (path.cumulative_now(k) < level) continue;
      const double tk = bisect([&](double t) { return path.cumulative(t, k) >= level; }, t0, t1, tol.event);
      if (tk < cand) {
        cand = tk;
        cand_cause = Passage::Cause::Hazard;
        cand_index = numeric[k];
      }
    }

    if (cand_cause != Passage::Cause::TimeLimit) {
      best.cause = cand_cause;
      best.index = cand_index;
      best.time = cand;
      path.state_at(cand, best.state);
      return best;
    }
    if (t1 >= t_stop) {
      path.state_at(t_stop, best.state);
      return best;
    }
  }
}

std::optional<double> sample_jump_time(const Flow& flow, const Hazard& hazard,
                                       std::span<const double> x0, Rng& rng, SamplingMethod method,
                                       std::optional<double> horizon, const FlowTolerances& tol) {
  const double cap = horizon.value_or(tol.horizon_cap);
  if (method == SamplingMethod::InverseTransform) {
    const double level = rng.exponential(1.0);
    const Hazard* hz[] = {&hazard};
    const double lv[] = {level};
    const Passage p = first_passage(flow, x0, hz, lv, {}, cap, tol);
    if (p.cause == Passage::Cause::Hazard) return p.time;
    return std::nullopt;
  }

  const auto bound = hazard.upper_bound();
  if (!bound) throw Error(ErrorKind::MissingBound, "thinning requires a hazard upper bound");
  if (*bound <= 0.0) return std::nullopt;
  double t = 0.0;
  State x(x0.begin(), x0.end());
  for (;;) {
    const double t_next = t + rng.exponential(*bound);
    if (t_next > cap) return std::nullopt;
    x = flow_evolve(flow, x, t_next - t, tol);
    t = t_next;
    const double r = hazard.rate(x);
    if (r > *bound * (1.0 + 1e-12)) {
      throw Error(ErrorKind::InvalidParam, "hazard rate " + std::to_string(r) +
                                               " exceeds its declared upper bound " +
                                               std::to_string(*bound));
    }
    if (rng.uniform() * *bound <= r) return t;
  }
}

}  // namespace pdmp
