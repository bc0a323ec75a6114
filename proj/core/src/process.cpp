#include "pdmp/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdmp/error.hpp"

namespace pdmp {

PdmpModel::PdmpModel(std::string name, std::size_t dimension, std::vector<Regime> regimes, ParamRecord params,
                     FlowTolerances tolerances)
    : name_(std::move(name)),
      dim_(dimension),
      regimes_(std::move(regimes)),
      params_(std::move(params)),
      tol_(tolerances) {
  if (regimes_.empty()) throw_invalid_param(name_, "at least one regime is required");
  for (std::size_t i = 0; i < regimes_.size(); ++i) {
    const Regime& r = regimes_[i];
    const std::string where = "regime " + std::to_string(i);
    if (r.flow.dimension() != dim_) throw_invalid_param(name_, where + ": flow dimension mismatch");
    if (!r.absorbing && r.hazards.empty() && r.clocks.empty()) {
      throw_invalid_param(name_, where + ": needs a hazard or clock unless declared absorbing");
    }
    for (const auto& h : r.hazards) {
      if (!h.kernel.sample) throw_invalid_param(name_, where + ": transition '" + h.name + "' has no kernel");
    }
    for (const auto& c : r.clocks) {
      if (!c.kernel.sample) throw_invalid_param(name_, where + ": clock '" + c.name + "' has no kernel");
      if (const auto* d = std::get_if<FixedDelay>(&c.trigger)) {
        if (!(d->duration > 0.0 && std::isfinite(d->duration))) {
          throw_invalid_param(name_, where + ": fixed delay duration must be positive");
        }
      } else if (!std::get<BoundaryHit>(c.trigger).h) {
        throw_invalid_param(name_, where + ": boundary clock needs an event function");
      }
    }
  }
}

const Regime& PdmpModel::regime(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= regimes_.size()) {
    throw Error(ErrorKind::InvalidParam, "regime id " + std::to_string(id) + " out of range for model " + name_);
  }
  return regimes_[static_cast<std::size_t>(id)];
}

Event next_event(const PdmpModel& model, const ProcessState& state, Rng& rng, double cap) {
  if (!(cap >= 0.0)) throw Error(ErrorKind::InvalidParam, "next_event requires a nonnegative cap");
  const Regime& regime = model.regime(state.regime);

  std::vector<const Hazard*> hazards;
  std::vector<double> levels;
  hazards.reserve(regime.hazards.size());
  for (const auto& h : regime.hazards) {
    hazards.push_back(&h.hazard);
    levels.push_back(rng.exponential(1.0));
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  double delay_time = kInf;
  std::size_t delay_clock = 0;
  std::vector<const ScalarField*> boundaries;
  std::vector<std::size_t> boundary_clock;
  for (std::size_t c = 0; c < regime.clocks.size(); ++c) {
    const auto& clock = regime.clocks[c];
    if (const auto* d = std::get_if<FixedDelay>(&clock.trigger)) {
      const double residual = std::max(0.0, d->duration - state.regime_age);
      if (residual < delay_time) {
        delay_time = residual;
        delay_clock = c;
      }
    } else {
      boundaries.push_back(&std::get<BoundaryHit>(clock.trigger).h);
      boundary_clock.push_back(c);
    }
  }

  const bool delay_in_range = delay_time <= cap;
  const double t_limit = delay_in_range ? delay_time : cap;
  const Passage p = first_passage(regime.flow, state.x, hazards, levels, boundaries, t_limit, model.tolerances());

  Event ev;
  ev.pre = p.state;
  ev.regime_pre = state.regime;
  ev.dt = p.time;

  const JumpKernel* kernel = nullptr;
  std::string label;
  const bool at_delay = delay_in_range && p.time >= delay_time;
  if (p.cause == Passage::Cause::Boundary) {
    std::size_t c = boundary_clock[p.index];
    if (at_delay && delay_clock < c) c = delay_clock;
    ev.deterministic = true;
    ev.cause = c;
  } else if (at_delay) {
    // Covers both the plain time-limit stop and a hazard tying with the delay.
    ev.deterministic = true;
    ev.cause = delay_clock;
  } else if (p.cause == Passage::Cause::Hazard) {
    ev.deterministic = false;
    ev.cause = p.index;
  } else {
    ev.occurred = false;
    ev.post = ev.pre;
    ev.regime_post = state.regime;
    return ev;
  }

  if (ev.deterministic) {
    kernel = &regime.clocks[ev.cause].kernel;
    label = regime.clocks[ev.cause].name;
  } else {
    kernel = &regime.hazards[ev.cause].kernel;
    label = regime.hazards[ev.cause].name;
  }
  JumpOutcome out = kernel->sample(ev.pre, state.regime, rng);
  if (out.state.size() != model.dimension()) {
    throw Error(ErrorKind::InvalidParam, "jump kernel '" + label + "' returned a state of wrong dimension");
  }
  model.regime(out.regime);  // range check
  ev.occurred = true;
  ev.kind = out.kind.empty() ? label : std::move(out.kind);
  ev.post = std::move(out.state);
  ev.regime_post = out.regime;
  return ev;
}

PathSummary simulate_path(const PdmpModel& model, const ProcessState& initial, double horizon, Rng& rng,
                          PathObserver& observer, const SimulationOptions& options) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::InvalidParam, "horizon must be positive and finite");
  }
  if (initial.x.size() != model.dimension()) {
    throw Error(ErrorKind::InvalidParam, "initial state has wrong dimension for model " + model.name());
  }
  model.regime(initial.regime);

  ProcessState s = initial;
  double t = 0.0;
  PathSummary summary;
  for (;;) {
    const double remaining = horizon - t;
    Event ev = next_event(model, s, rng, remaining);
    if (!ev.occurred) {
      observer.on_segment(model, t, horizon, s.regime, s.x, ev.pre, true);
      s.x = std::move(ev.pre);
      s.regime_age += remaining;
      break;
    }
    const double t_jump = ev.dt >= remaining ? horizon : t + ev.dt;
    observer.on_segment(model, t, t_jump, s.regime, s.x, ev.pre, false);

    JumpRecord jump{t_jump, std::move(ev.kind), ev.regime_pre, ev.regime_post, std::move(ev.pre), ev.post};
    observer.on_jump(jump);
    if (++summary.jumps > options.max_jumps) {
      throw Error(ErrorKind::JumpBudgetExceeded,
                  "path exceeded " + std::to_string(options.max_jumps) + " jumps before the horizon");
    }
    if (options.check_kernels && !model.regime(ev.regime_post).flow.in_domain(ev.post)) {
      throw Error(ErrorKind::DomainExit, "jump '" + jump.kind + "' left the target regime's domain");
    }
    const bool reset = ev.deterministic || ev.regime_post != s.regime;
    s.regime_age = reset ? 0.0 : s.regime_age + ev.dt;
    s.x = std::move(ev.post);
    s.regime = ev.regime_post;
    t = t_jump;
    if (t >= horizon) {
      observer.on_segment(model, t, horizon, s.regime, s.x, s.x, true);
      break;
    }
  }
  summary.final_state = std::move(s);
  summary.status = model.regime(summary.final_state.regime).absorbing ? PathStatus::Absorbed : PathStatus::Horizon;
  return summary;
}

void TrajectoryRecorder::on_segment(const PdmpModel&, double t_start, double t_end, int regime,
                                    std::span<const double> start, std::span<const double> end, bool last) {
  traj_.segments.push_back({t_start, regime, State(start.begin(), start.end())});
  if (last) {
    traj_.horizon = t_end;
    traj_.final_state.assign(end.begin(), end.end());
    traj_.final_regime = regime;
  }
}

void TrajectoryRecorder::on_jump(const JumpRecord& jump) { traj_.jumps.push_back(jump); }

Trajectory simulate_trajectory(const PdmpModel& model, const ProcessState& initial, double horizon, Rng& rng,
                               const SimulationOptions& options) {
  TrajectoryRecorder rec;
  const PathSummary s = simulate_path(model, initial, horizon, rng, rec, options);
  Trajectory out = std::move(rec.trajectory());
  out.status = s.status;
  return out;
}

SnapshotRecorder::SnapshotRecorder(std::vector<double> times) : times_(std::move(times)) {
  std::sort(times_.begin(), times_.end());
  out_.reserve(times_.size());
}

void SnapshotRecorder::on_segment(const PdmpModel& model, double t_start, double t_end, int regime,
                                  std::span<const double> start, std::span<const double> end, bool last) {
  while (next_ < times_.size()) {
    const double s = times_[next_];
    if (s < t_start) {
      ++next_;
      continue;
    }
    if (!(s < t_end || (last && s <= t_end))) break;
    Snapshot snap{s, regime, {}};
    if (s == t_start) snap.x.assign(start.begin(), start.end());
    else if (s == t_end) snap.x.assign(end.begin(), end.end());
    else snap.x = flow_evolve(model.regime(regime).flow, start, s - t_start, model.tolerances());
    out_.push_back(std::move(snap));
    ++next_;
  }
}

void ObserverChain::on_segment(const PdmpModel& model, double t_start, double t_end, int regime,
                               std::span<const double> start, std::span<const double> end, bool last) {
  for (auto* o : list_) o->on_segment(model, t_start, t_end, regime, start, end, last);
}

void ObserverChain::on_jump(const JumpRecord& jump) {
  for (auto* o : list_) o->on_jump(jump);
}

}  // namespace pdmp
