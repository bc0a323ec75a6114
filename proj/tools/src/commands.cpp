#include "pdmp_app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pdmp/catalog.hpp"
#include "pdmp/error.hpp"
#include "pdmp/hormander.hpp"
#include "pdmp/io.hpp"
#include "pdmp/montecarlo.hpp"
#include "pdmp/population.hpp"
#include "pdmp/scalar_function.hpp"
#include "pdmp/switching.hpp"
#include "pdmp_app/experiments.hpp"

namespace pdmp::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::ConfigError, "config key '" + key + "': " + what, key);
}

density::Fn parse_fn(const std::string& text, const std::string& key) {
  try {
    return ScalarFunction::parse(text).as_function();
  } catch (const Error& e) {
    config_error(key, e.what());
  }
}

/// Scales every regime (and the phase-B bins) so the total mass is 1.
void normalize(density::DensityGrid& f) {
  // For the two-phase solver regime 1 already holds the phase-B marginal.
  const double m = f.mass();
  if (!(m > 0.0) || !std::isfinite(m)) config_error("grid.initial", "initial density must have positive finite mass");
  for (auto& r : f.values) {
    for (double& v : r) v /= m;
  }
  for (double& v : f.age_bins) v /= m;
  for (double& v : f.phase_b) v /= m;
  f.audit = density::MassAudit{};
  f.audit.initial_mass = f.mass();
  for (const auto& r : f.values) {
    for (double v : r) f.audit.min_value = std::min(f.audit.min_value, v);
  }
  for (double v : f.age_bins) f.audit.min_value = std::min(f.audit.min_value, v);
}

std::vector<std::string> initial_exprs(const GridSection& g, std::size_t regimes, std::vector<std::string> fallback) {
  if (g.initial.empty()) return fallback;
  if (g.initial.size() != regimes) {
    config_error("grid.initial", "expected " + std::to_string(regimes) + " initial densities");
  }
  return g.initial;
}

ProcessState initial_state(const ExperimentConfig& c, const PdmpModel& model) {
  ProcessState s = catalog::default_initial_state(c.model.name, c.model.params);
  if (c.simulate.initial_state) {
    s.x = *c.simulate.initial_state;
    s.regime = c.simulate.initial_regime;
  } else if (c.simulate.initial_regime != 0) {
    s.regime = c.simulate.initial_regime;
  }
  if (s.x.size() != model.dimension()) {
    config_error("simulate.initial_state", "expected " + std::to_string(model.dimension()) + " components");
  }
  if (s.regime < 0 || static_cast<std::size_t>(s.regime) >= model.regime_count()) {
    config_error("simulate.initial_regime", "no such regime");
  }
  return s;
}

std::string path_str(const fs::path& p) { return p.generic_string(); }

ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

struct Writer {
  fs::path dir;
  RunOutcome* out;
  void file(const std::string& name, const std::string& content) {
    const fs::path p = dir / name;
    write_text_file(p, content);
    out->artifacts.push_back(p);
  }
};

void finish(RunOutcome& out, ordered_json summary) {
  ordered_json arts = ordered_json::array();
  for (const auto& a : out.artifacts) arts.push_back(path_str(a));
  summary["artifacts"] = arts;
  out.summary = summary.dump(2) + "\n";
}

ordered_json base_summary(const ExperimentConfig& c) {
  ordered_json j;
  j["schema_version"] = 1;
  j["command"] = c.command;
  if (!c.model.name.empty()) j["model"] = c.model.name;
  j["seed"] = c.seed;
  return j;
}

// --- commands -----------------------------------------------------------------

RunOutcome cmd_simulate(const ExperimentConfig& c) {
  const PdmpModel model = catalog::build_model(c.model.name, c.model.params);
  const ProcessState init = initial_state(c, model);
  EnsembleOptions o;
  o.n_paths = c.simulate.n_paths;
  o.seed = c.seed;
  o.horizon = c.simulate.horizon;
  o.snapshot_times = c.simulate.snapshot_times;
  o.record_trajectories = c.simulate.trajectories;
  o.threads = c.threads;
  o.simulation.max_jumps = c.simulate.max_jumps;
  if (!(o.horizon > 0.0)) config_error("simulate.horizon", "must be positive");
  const EnsembleResult res = simulate_ensemble(model, [init](Rng&) { return init; }, o);

  RunOutcome out;
  Writer w{c.output, &out};
  if (c.simulate.trajectories) {
    std::ostringstream os;
    write_trajectory_header(os, model.dimension());
    for (std::size_t i = 0; i < res.paths.size(); ++i) {
      if (res.paths[i].trajectory) write_trajectory_rows(os, i, *res.paths[i].trajectory, init.x, init.regime);
    }
    w.file("trajectories.csv", os.str());
  }
  if (!c.simulate.snapshot_times.empty()) {
    std::ostringstream os;
    write_snapshot_header(os, model.dimension());
    for (std::size_t i = 0; i < res.paths.size(); ++i) write_snapshot_rows(os, i, res.paths[i].snapshots);
    w.file("snapshots.csv", os.str());
  }
  ordered_json j = base_summary(c);
  j["n_paths"] = res.paths.size();
  std::size_t jumps = 0;
  ordered_json failures = ordered_json::array();
  for (std::size_t i = 0; i < res.paths.size(); ++i) {
    jumps += res.paths[i].summary.jumps;
    if (!res.paths[i].error.empty()) failures.push_back({{"path", i}, {"error", res.paths[i].error}});
  }
  j["total_jumps"] = jumps;
  j["failures"] = failures;
  finish(out, j);
  return out;
}

switching::SwitchingSystem1D require_switching(const ExperimentConfig& c) {
  auto sys = catalog::switching_system(c.model.name, c.model.params);
  if (!sys) config_error("model.name", "'" + c.model.name + "' is not a two-regime switching model");
  return *sys;
}

switching::ClassificationReport classify_model(const ExperimentConfig& c) {
  const auto sys = require_switching(c);
  const auto d = catalog::switching_derivatives(c.model.name, c.model.params);
  return switching::classify(sys, d.value_or(switching::Derivatives{}));
}

RunOutcome cmd_classify(const ExperimentConfig& c) {
  RunOutcome out;
  Writer w{c.output, &out};
  const auto report = classify_model(c);
  w.file("classification.json", switching::to_json(report));
  ordered_json j = base_summary(c);
  j["verdict"] = std::string(switching::to_string(report.verdict));
  finish(out, j);
  return out;
}

RunOutcome cmd_stationary(const ExperimentConfig& c) {
  RunOutcome out;
  Writer w{c.output, &out};
  const auto sys = require_switching(c);
  const auto report = classify_model(c);
  const switching::StationaryDensity sd(sys);
  const density::Grid1D grid(c.grid.x_min.value_or(sys.lower), c.grid.x_max.value_or(sys.upper), c.grid.n);
  std::ostringstream os;
  os << (sd.normalizable() ? "cell_center,regime,density\n" : "cell_center,regime,unnormalized_density\n");
  for (int r = 0; r < 2; ++r) {
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double x = grid.center(i);
      const double v = sd.normalizable() ? sd.density(r, x) : sd.unnormalized(r, x);
      os << format_double(x) << ',' << r << ',' << format_double(v) << '\n';
    }
  }
  w.file("stationary.csv", os.str());
  w.file("classification.json", switching::to_json(report));
  ordered_json j = base_summary(c);
  j["normalizable"] = sd.normalizable();
  j["alpha"] = json_number(sd.alpha());
  j["verdict"] = std::string(switching::to_string(report.verdict));
  finish(out, j);
  return out;
}

ordered_json audit_json(const density::MassAudit& a) {
  return {{"initial_mass", a.initial_mass},
          {"outflow", a.outflow},
          {"max_defect", a.max_defect},
          {"min_value", json_number(a.min_value)},
          {"steps", a.steps}};
}

RunOutcome cmd_evolve(const ExperimentConfig& c) {
  RunOutcome out;
  Writer w{c.output, &out};
  const SolverSetup setup = make_solver(c.model, c.grid);
  const EvolveResult res = evolve(setup, c.grid);
  std::ostringstream os;
  bool header = true;
  for (const auto& f : res.snapshots) {
    density::write_csv(os, f, header);
    header = false;
  }
  w.file("density.csv", os.str());
  const auto& last = res.snapshots.back();
  if (setup.kind == "two_phase") {
    std::ostringstream pb;
    pb << "t,cell_center,y_center,value\n";
    const double hy = last.y_max / static_cast<double>(last.ny);
    for (const auto& f : res.snapshots) {
      for (std::size_t j = 0; j < f.grid.n; ++j) {
        for (std::size_t k = 0; k < f.ny; ++k) {
          pb << format_double(f.t) << ',' << format_double(f.grid.center(j)) << ','
             << format_double(hy * (static_cast<double>(k) + 0.5)) << ',' << format_double(f.phase_b[j * f.ny + k])
             << '\n';
        }
      }
    }
    w.file("phase_b.csv", pb.str());
  }
  ordered_json j = base_summary(c);
  j["solver"] = setup.kind;
  j["t_final"] = last.t;
  j["mass"] = last.mass();
  j["steady"] = c.grid.steady;
  if (c.grid.steady) {
    j["converged"] = res.converged;
    j["residual"] = json_number(res.residual);
  }
  j["audit"] = audit_json(last.audit);
  w.file("audit.json", j.dump(2) + "\n");
  finish(out, j);
  return out;
}

RunOutcome cmd_compare(const ExperimentConfig& c) {
  RunOutcome out;
  Writer w{c.output, &out};
  const PdmpModel model = catalog::build_model(c.model.name, c.model.params);
  const ProcessState init = initial_state(c, model);
  mc::OccupationOptions o;
  o.n_paths = c.compare.n_paths;
  o.horizon = c.compare.horizon;
  o.burn_in_fraction = c.compare.burn_in;
  o.delta = c.compare.delta;
  o.seed = c.seed;
  o.threads = c.threads;
  o.simulation.max_jumps = c.simulate.max_jumps;
  const mc::OccupationSample s = mc::occupation_samples(model, [init](Rng&) { return init; }, o);

  double l1 = 0.0;
  std::optional<mc::Histogram> hist;
  ordered_json j = base_summary(c);
  j["reference"] = c.compare.reference;
  if (c.compare.reference == "stationary") {
    const auto sys = require_switching(c);
    const switching::StationaryDensity sd(sys);
    if (!sd.normalizable()) {
      throw Error(ErrorKind::DivergentIntegral, "stationary density is not normalizable; nothing to compare against");
    }
    const density::Grid1D grid(c.grid.x_min.value_or(sys.lower), c.grid.x_max.value_or(sys.upper), c.compare.bins);
    hist = mc::empirical_density(s.values, s.regimes, 2, grid);
    l1 = mc::l1_distance(*hist, std::vector<density::Fn>{[&](double x) { return sd.density(0, x); },
                                                         [&](double x) { return sd.density(1, x); }});
  } else {
    const SolverSetup setup = make_solver(c.model, c.grid);
    const EvolveResult res = evolve(setup, c.grid);
    const auto& f = res.snapshots.back();
    hist = mc::empirical_density(s.values, s.regimes, f.regimes(), f.grid);
    l1 = mc::l1_distance(*hist, f);
    j["pde_t"] = f.t;
    j["pde_converged"] = res.converged;
  }
  const auto report = mc::make_fit_report(l1, -1.0, hist->sample_size, hist->below + hist->above,
                                          c.compare.l1_threshold, 0.0);
  std::ostringstream hs;
  mc::write_csv(hs, *hist);
  w.file("histogram.csv", hs.str());
  w.file("fit_report.json", mc::to_json(report));
  out.pass = report.pass;
  j["l1_distance"] = l1;
  j["pass"] = report.pass;
  finish(out, j);
  return out;
}

RunOutcome cmd_hormander(const ExperimentConfig& c) {
  RunOutcome out;
  Writer w{c.output, &out};
  const PdmpModel model = catalog::build_model(c.model.name, c.model.params);
  std::vector<Flow> flows;
  for (const auto& r : model.regimes()) flows.push_back(r.flow);
  std::vector<std::vector<double>> points = c.hormander.points;
  if (points.empty()) {
    if (auto sys = catalog::switching_system(c.model.name, c.model.params)) {
      points.push_back({0.5 * (sys->lower + sys->upper)});
    } else {
      points.push_back(catalog::default_initial_state(c.model.name, c.model.params).x);
    }
  }
  ordered_json pts = ordered_json::array();
  bool all = true;
  for (const auto& p : points) {
    if (p.size() != model.dimension()) config_error("hormander.points", "point has the wrong dimension");
    const auto r = hormander::hormander_check(flows, p, c.hormander.depth, c.hormander.tol);
    all = all && r.holds;
    pts.push_back({{"x", p},
                   {"holds", r.holds},
                   {"rank", r.rank},
                   {"dimension", r.dimension},
                   {"directions", r.labels},
                   {"singular_values", r.singular_values}});
  }
  ordered_json j = base_summary(c);
  j["depth"] = c.hormander.depth;
  j["tol"] = c.hormander.tol;
  j["holds"] = all;
  j["points"] = pts;
  w.file("hormander.json", j.dump(2) + "\n");
  ordered_json s = base_summary(c);
  s["holds"] = all;
  finish(out, s);
  return out;
}

RunOutcome cmd_population(const ExperimentConfig& c) {
  RunOutcome out;
  Writer w{c.output, &out};
  if (c.model.name != "population") config_error("model.name", "the population command needs model 'population'");
  const models::PopulationParams params = catalog::population_params(c.model.params);
  const auto& ps = c.population;
  std::vector<models::PopulationTrajectory> runs(ps.runs);
  std::vector<std::string> errors(ps.runs);
  models::PopulationOptions opts;
  opts.snapshot_times = ps.snapshot_times;
  parallel_for(ps.runs, c.threads, [&](std::size_t i) {
    try {
      Rng rng = Rng::for_stream(c.seed, i);
      runs[i] = models::simulate_population(params, ps.initial_sizes, ps.horizon, rng, opts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::PopulationBlowup) throw;
      errors[i] = e.what();
    }
  });
  std::ostringstream ev, counts, sizes;
  ev << "run_id,t,event_kind,size,population_after\n";
  counts << "run_id,t,population\n";
  sizes << "run_id,t,size\n";
  std::size_t extinct = 0, ok = 0;
  double sum = 0.0, sum2 = 0.0;
  ordered_json failures = ordered_json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!errors[i].empty()) {
      failures.push_back({{"run", i}, {"error", errors[i]}});
      continue;
    }
    const auto& r = runs[i];
    for (const auto& e : r.events) {
      ev << i << ',' << format_double(e.t) << ',' << models::to_string(e.kind) << ',' << format_double(e.size) << ','
         << e.population_after << '\n';
    }
    for (const auto& s : r.snapshots) {
      counts << i << ',' << format_double(s.t) << ',' << s.sizes.size() << '\n';
      for (double x : s.sizes) sizes << i << ',' << format_double(s.t) << ',' << format_double(x) << '\n';
    }
    ++ok;
    extinct += r.extinct ? 1 : 0;
    const double n = static_cast<double>(r.final_sizes.size());
    sum += n;
    sum2 += n * n;
  }
  w.file("events.csv", ev.str());
  w.file("counts.csv", counts.str());
  w.file("sizes.csv", sizes.str());
  ordered_json j = base_summary(c);
  j["runs"] = ps.runs;
  j["completed"] = ok;
  const double mean = ok ? sum / static_cast<double>(ok) : 0.0;
  const double var = ok > 1 ? (sum2 - static_cast<double>(ok) * mean * mean) / static_cast<double>(ok - 1) : 0.0;
  j["extinction_fraction"] = ok ? static_cast<double>(extinct) / static_cast<double>(ok) : 0.0;
  j["mean_final_population"] = mean;
  j["stderr_final_population"] = ok ? std::sqrt(std::max(var, 0.0) / static_cast<double>(ok)) : 0.0;
  j["failures"] = failures;
  w.file("summary.json", j.dump(2) + "\n");
  finish(out, j);
  return out;
}

RunOutcome cmd_experiment(const ExperimentConfig& c) {
  RunOutcome out;
  Writer w{c.output, &out};
  const ExperimentReport r = run_experiment(c);
  w.file("experiment.json", to_json(r));
  out.pass = r.pass();
  ordered_json j = base_summary(c);
  j["experiment"] = r.name;
  j["pass"] = r.pass();
  finish(out, j);
  return out;
}

}  // namespace

SolverSetup make_solver(const ModelSection& m, const GridSection& g) {
  const std::string& name = m.name;
  if (name == "transport") {
    for (const auto& [k, v] : m.params) {
      if (k != "g") config_error("model.params." + k, "unknown parameter for transport");
    }
    auto it = m.params.find("g");
    if (it == m.params.end()) config_error("model.params.g", "transport needs a velocity field g");
    const ScalarFunction vel = std::holds_alternative<double>(it->second)
                                   ? ScalarFunction(std::get<double>(it->second))
                                   : ScalarFunction::parse(std::get<std::string>(it->second));
    const density::Grid1D grid(g.x_min.value_or(0.0), g.x_max.value_or(1.0), g.n);
    const auto init = initial_exprs(g, 1, {"1"});
    density::DensityGrid f(grid, {density::cell_averages(grid, parse_fn(init[0], "grid.initial"))});
    normalize(f);
    return {std::make_unique<density::LiouvilleSolver>(grid, vel.as_function(), g.dt), std::move(f), "liouville"};
  }
  if (auto sys = catalog::switching_system(name, m.params)) {
    const density::Grid1D grid(g.x_min.value_or(sys->lower), g.x_max.value_or(sys->upper), g.n);
    const auto init = initial_exprs(g, 2, {"1", "1"});
    density::DensityGrid f(grid, {density::cell_averages(grid, parse_fn(init[0], "grid.initial")),
                                  density::cell_averages(grid, parse_fn(init[1], "grid.initial"))});
    normalize(f);
    return {std::make_unique<density::SwitchingSolver>(grid, sys->g0, sys->g1, sys->q0, sys->q1, g.dt), std::move(f),
            "switching"};
  }
  if (g.x_min && *g.x_min != 0.0) config_error("grid.x_min", "cell-cycle grids start at 0");
  const density::Grid1D grid(0.0, g.x_max.value_or(4.0), g.n, true);
  if (name == "cell_cycle_1p") {
    const auto p = catalog::cell_cycle_1p_params(m.params);
    (void)models::make_cell_cycle_one_phase(p);
    const auto init = initial_exprs(g, 1, {"1"});
    density::DensityGrid f(grid, {density::cell_averages(grid, parse_fn(init[0], "grid.initial"))});
    normalize(f);
    return {std::make_unique<density::CellCycleSolver>(grid, p.g.as_function(), p.phi.as_function(), g.dt),
            std::move(f), "cell_cycle"};
  }
  if (name == "cell_cycle_2p") {
    const auto p = catalog::cell_cycle_2p_params(m.params);
    (void)models::make_two_phase_cell_cycle(p);
    const auto init = initial_exprs(g, 2, {"1", "0"});
    auto solver =
        std::make_unique<density::TwoPhaseSolver>(grid, g.ny, p.g.as_function(), p.phi.as_function(), p.t_B, g.dt);
    const auto a = density::cell_averages(grid, parse_fn(init[0], "grid.initial"));
    const auto bx = density::cell_averages(grid, parse_fn(init[1], "grid.initial"));
    std::vector<double> b(grid.n * g.ny);
    for (std::size_t j = 0; j < grid.n; ++j) {
      for (std::size_t k = 0; k < g.ny; ++k) b[j * g.ny + k] = bx[j];
    }
    density::DensityGrid f = solver->initial(a, b);
    normalize(f);
    return {std::move(solver), std::move(f), "two_phase"};
  }
  config_error("model.name", "no density solver for model '" + name + "'");
}

EvolveResult evolve(const SolverSetup& setup, const GridSection& g) {
  if (!(g.t_end > 0.0)) config_error("grid.t_end", "must be positive");
  EvolveResult res;
  if (g.steady) {
    auto s = density::steady_state(*setup.evolver, setup.initial, g.tol, g.t_end, g.check_interval);
    res.converged = s.converged;
    res.residual = s.residual;
    res.snapshots.push_back(std::move(s.density));
    return res;
  }
  std::vector<double> times;
  for (double t : g.snapshot_times) {
    if (t > 0.0 && t < g.t_end) times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  times.push_back(g.t_end);
  density::DensityGrid f = setup.initial;
  for (double t : times) {
    setup.evolver->advance(f, t);
    res.snapshots.push_back(f);
  }
  return res;
}

RunOutcome run(const ExperimentConfig& c) {
  if (c.command == "simulate") return cmd_simulate(c);
  if (c.command == "stationary") return cmd_stationary(c);
  if (c.command == "classify") return cmd_classify(c);
  if (c.command == "evolve") return cmd_evolve(c);
  if (c.command == "compare") return cmd_compare(c);
  if (c.command == "hormander") return cmd_hormander(c);
  if (c.command == "population") return cmd_population(c);
  if (c.command == "experiment") return cmd_experiment(c);
  config_error("command", "unknown command '" + c.command + "'");
}

std::string error_json(const std::exception& e) {
  ordered_json j;
  j["schema_version"] = 1;
  if (const auto* pe = dynamic_cast<const Error*>(&e)) {
    j["error"] = std::string(to_string(pe->kind()));
    j["key"] = pe->key().empty() ? ordered_json(nullptr) : ordered_json(pe->key());
  } else {
    j["error"] = "InternalError";
    j["key"] = nullptr;
  }
  j["message"] = e.what();
  return j.dump(2) + "\n";
}

}  // namespace pdmp::app
