#include "pdmp/population.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pdmp/error.hpp"
#include "pdmp/flow.hpp"

namespace pdmp::models {

namespace {

constexpr const char* kName = "population";

/// All sizes move along x' = g(x) independently.
Flow product_flow(const ScalarFunction& g, std::size_t k) {
  Flow f(k, [g](std::span<const double> x, std::span<double> d) {
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = g(x[i]);
  });
  if (g.is_constant()) {
    const double c = g.constant_value();
    f.with_closed_form([c](double t, std::span<const double> x0, std::span<double> out) {
      for (std::size_t i = 0; i < x0.size(); ++i) out[i] = x0[i] + c * t;
    });
  }
  return f;
}

}  // namespace

const char* to_string(PopulationEvent::Kind kind) {
  return kind == PopulationEvent::Kind::Division ? "division" : "death";
}

PopulationTrajectory simulate_population(const PopulationParams& params, std::vector<double> initial,
                                         double horizon, Rng& rng, const PopulationOptions& options) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw_invalid_param(kName, "horizon > 0", "horizon");
  for (double x : initial) {
    if (!(x > 0.0 && std::isfinite(x))) throw_invalid_param(kName, "initial sizes > 0", "initial");
  }
  if (options.recompute_every == 0) throw_invalid_param(kName, "recompute_every >= 1");

  const ScalarFunction& b = params.b;
  const ScalarFunction& d = params.d;
  auto cell_rate = [&](double x) {
    const double r = b(x) + d(x);
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Error(ErrorKind::InvalidParam, "division/death rates must be finite and nonnegative at x=" +
                                               std::to_string(x));
    }
    return r;
  };
  const bool frozen = params.g.is_constant() && params.g.constant_value() == 0.0;
  const bool constant_rates = b.is_constant() && d.is_constant();

  std::vector<double> times = options.snapshot_times;
  std::sort(times.begin(), times.end());
  std::size_t next_snap = 0;

  PopulationTrajectory out;
  out.horizon = horizon;
  std::vector<double> sizes = std::move(initial);
  out.peak_population = sizes.size();

  std::vector<double> rates;
  double total = 0.0;
  auto recompute = [&] {
    rates.resize(sizes.size());
    double s = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) s += (rates[i] = cell_rate(sizes[i]));
    return s;
  };
  total = recompute();
  std::size_t since_check = 0;

  // Snapshots in [t_from, t_to) (or up to t_to inclusive at the end) see
  // the sizes flowed forward from `base` at time t_from.
  auto take_snapshots = [&](double t_from, double t_to, const std::vector<double>& base, bool inclusive) {
    while (next_snap < times.size() && (times[next_snap] < t_to || (inclusive && times[next_snap] <= t_to))) {
      const double s = times[next_snap++];
      if (s < t_from) continue;
      PopulationSnapshot snap{s, base};
      if (!frozen && !base.empty() && s > t_from) {
        snap.sizes = flow_evolve(product_flow(params.g, base.size()), base, s - t_from);
      }
      out.snapshots.push_back(std::move(snap));
    }
  };

  double t = 0.0;
  for (;;) {
    if (sizes.empty()) {
      out.extinct = true;
      out.extinction_time = t;
      take_snapshots(t, horizon, sizes, true);
      break;
    }
    const double remaining = horizon - t;
    double tau = remaining;
    bool fired = false;
    std::vector<double> pre;
    if (frozen) {
      if (total > 0.0) {
        const double draw = rng.exponential(total);
        if (draw <= remaining) {
          tau = draw;
          fired = true;
        }
      }
      pre = sizes;
    } else {
      const Flow flow = product_flow(params.g, sizes.size());
      std::optional<Hazard> hz;
      if (constant_rates) {
        hz.emplace(Hazard::constant(static_cast<double>(sizes.size()) * (b.constant_value() + d.constant_value())));
      } else {
        hz.emplace([&](std::span<const double> x) {
          double s = 0.0;
          for (double xi : x) s += cell_rate(xi);
          return s;
        });
      }
      const Hazard* hs[] = {&*hz};
      const double level[] = {rng.exponential(1.0)};
      const Passage p = first_passage(flow, sizes, hs, level, {}, remaining);
      fired = p.cause == Passage::Cause::Hazard;
      tau = p.time;
      pre = p.state;
    }

    if (!fired) {
      take_snapshots(t, horizon, sizes, true);
      sizes = std::move(pre);
      t = horizon;
      break;
    }
    const double t_event = t + tau;
    take_snapshots(t, t_event, sizes, false);
    sizes = std::move(pre);
    if (!frozen) total = recompute();

    // Pick the acting cell in proportion to its rate at the jump.
    const double u = rng.uniform() * total;
    std::size_t i = 0;
    double acc = 0.0;
    for (; i + 1 < sizes.size(); ++i) {
      acc += rates[i];
      if (u < acc) break;
    }
    const double x = sizes[i];
    const double bx = b(x), dx = d(x);
    const bool death = rng.uniform() * (bx + dx) < dx;

    total -= rates[i];
    if (death) {
      sizes[i] = sizes.back();
      rates[i] = rates.back();
      sizes.pop_back();
      rates.pop_back();
    } else {
      const double half = 0.5 * x;
      const double r = cell_rate(half);
      sizes[i] = half;
      rates[i] = r;
      sizes.push_back(half);
      rates.push_back(r);
      total += 2.0 * r;
    }
    t = t_event;
    if (sizes.size() > params.max_cells) {
      throw Error(ErrorKind::PopulationBlowup,
                  "population exceeded " + std::to_string(params.max_cells) + " cells at t=" + std::to_string(t));
    }
    out.peak_population = std::max(out.peak_population, sizes.size());
    if (options.record_events) {
      out.events.push_back({t, death ? PopulationEvent::Kind::Death : PopulationEvent::Kind::Division, x,
                            sizes.size()});
    }

    if (++since_check >= options.recompute_every || sizes.empty()) {
      since_check = 0;
      const double fresh = recompute();
      if (std::abs(fresh - total) > 1e-9 * std::max(1.0, std::abs(fresh))) {
        throw std::logic_error("incremental population hazard drifted from the recomputed total");
      }
      total = fresh;
    }
  }
  out.final_sizes = std::move(sizes);
  return out;
}

}  // namespace pdmp::models
