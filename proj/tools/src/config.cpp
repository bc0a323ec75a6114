#include "pdmp_app/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <yaml-cpp/yaml.h>

#include "pdmp/error.hpp"
#include "pdmp/io.hpp"

namespace pdmp::app {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::ConfigError, "config key '" + key + "': " + what, key);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

/// Map node with a fixed set of allowed keys.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_) return;
    if (!node_.IsMap()) fail(path_.empty() ? "<root>" : path_, "expected a mapping");
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!allowed.count(k)) fail(join(path_, k), "unknown key");
    }
  }

  YAML::Node get(const std::string& key) const {
    return node_ ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
  }
  std::string key(const std::string& k) const { return join(path_, k); }

  double number(const std::string& k, double fallback) const {
    const YAML::Node n = get(k);
    if (!n) return fallback;
    return as_number(n, key(k));
  }

  std::optional<double> optional_number(const std::string& k) const {
    const YAML::Node n = get(k);
    if (!n) return std::nullopt;
    return as_number(n, key(k));
  }

  std::size_t count(const std::string& k, std::size_t fallback, std::size_t min = 1) const {
    const YAML::Node n = get(k);
    if (!n) return fallback;
    const double v = as_number(n, key(k));
    if (!(v >= static_cast<double>(min)) || v != std::floor(v) || v > 9.0e15) {
      fail(key(k), "expected an integer >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& k, bool fallback) const {
    const YAML::Node n = get(k);
    if (!n) return fallback;
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(key(k), "expected true or false");
    }
  }

  std::string text(const std::string& k, const std::string& fallback) const {
    const YAML::Node n = get(k);
    if (!n) return fallback;
    if (!n.IsScalar()) fail(key(k), "expected a string");
    return n.Scalar();
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> fallback) const {
    const YAML::Node n = get(k);
    if (!n) return fallback;
    return as_numbers(n, key(k));
  }

  std::vector<std::string> texts(const std::string& k) const {
    const YAML::Node n = get(k);
    std::vector<std::string> out;
    if (!n) return out;
    if (!n.IsSequence()) fail(key(k), "expected a list");
    for (const auto& e : n) {
      if (!e.IsScalar()) fail(key(k), "expected a list of strings");
      out.push_back(e.Scalar());
    }
    return out;
  }

  static double as_number(const YAML::Node& n, const std::string& key) {
    double v = 0.0;
    if (!n.IsScalar() || n.Tag() == "!" || !parse_number(n.Scalar(), v)) fail(key, "expected a number");
    return v;
  }

  static std::vector<double> as_numbers(const YAML::Node& n, const std::string& key) {
    if (!n.IsSequence()) fail(key, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& e : n) out.push_back(as_number(e, key));
    return out;
  }

 private:
  YAML::Node node_;
  std::string path_;
};

/// Unquoted numeric scalars become numbers; everything else stays text.
ParamRecord parse_record(const YAML::Node& n, const std::string& path) {
  ParamRecord out;
  if (!n) return out;
  if (!n.IsMap()) fail(path, "expected a mapping");
  for (const auto& kv : n) {
    const std::string k = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (!v.IsScalar()) fail(join(path, k), "expected a number or an expression");
    double d = 0.0;
    if (v.Tag() != "!" && parse_number(v.Scalar(), d)) out[k] = d;
    else out[k] = v.Scalar();
  }
  return out;
}

void emit_number(YAML::Emitter& e, double v) { e << format_double(v); }

void emit_numbers(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) emit_number(e, x);
  e << YAML::EndSeq;
}

void emit_record(YAML::Emitter& e, const ParamRecord& r) {
  e << YAML::BeginMap;
  for (const auto& [k, v] : r) {
    e << YAML::Key << k << YAML::Value;
    if (const double* d = std::get_if<double>(&v)) emit_number(e, *d);
    else e << YAML::DoubleQuoted << std::get<std::string>(v);
  }
  e << YAML::EndMap;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "stationary", "classify", "evolve",
                                              "compare",  "hormander",  "population", "experiment"};
  return names;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return command == o.command && seed == o.seed && output == o.output && threads == o.threads &&
         model == o.model && simulate == o.simulate && grid == o.grid && compare == o.compare &&
         hormander == o.hormander && population == o.population && experiment == o.experiment;
}

ExperimentConfig parse_config(const std::string& yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed YAML: ") + e.what());
  }
  if (!root || root.IsNull()) throw Error(ErrorKind::ConfigError, "empty config", "command");
  const Section top(root, "",
                    {"command", "seed", "output", "threads", "model", "simulate", "grid", "compare", "hormander",
                     "population", "experiment"});
  ExperimentConfig c;
  c.command = top.text("command", "");
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), c.command) == names.end()) {
    fail("command", "must be one of simulate, stationary, classify, evolve, compare, hormander, population, "
                    "experiment");
  }
  if (const YAML::Node s = top.get("seed")) {
    std::uint64_t v = 0;
    const std::string& t = s.Scalar();
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (!s.IsScalar() || ec != std::errc() || p != t.data() + t.size()) fail("seed", "expected an unsigned 64-bit integer");
    c.seed = v;
  }
  c.output = top.text("output", c.output);
  c.threads = static_cast<unsigned>(top.count("threads", c.threads));

  const Section model(top.get("model"), "model", {"name", "params"});
  c.model.name = model.text("name", "");
  c.model.params = parse_record(model.get("params"), "model.params");

  const Section sim(top.get("simulate"), "simulate",
                    {"n_paths", "horizon", "initial_state", "initial_regime", "snapshot_times", "trajectories",
                     "max_jumps"});
  c.simulate.n_paths = sim.count("n_paths", c.simulate.n_paths);
  c.simulate.horizon = sim.number("horizon", c.simulate.horizon);
  if (sim.get("initial_state")) c.simulate.initial_state = sim.numbers("initial_state", {});
  c.simulate.initial_regime = static_cast<int>(sim.count("initial_regime", 0, 0));
  c.simulate.snapshot_times = sim.numbers("snapshot_times", {});
  c.simulate.trajectories = sim.boolean("trajectories", c.simulate.trajectories);
  c.simulate.max_jumps = sim.count("max_jumps", c.simulate.max_jumps);

  const Section grid(top.get("grid"), "grid",
                     {"n", "x_min", "x_max", "dt", "t_end", "snapshot_times", "steady", "tol", "check_interval", "ny",
                      "initial"});
  c.grid.n = grid.count("n", c.grid.n);
  c.grid.x_min = grid.optional_number("x_min");
  c.grid.x_max = grid.optional_number("x_max");
  c.grid.dt = grid.number("dt", c.grid.dt);
  c.grid.t_end = grid.number("t_end", c.grid.t_end);
  c.grid.snapshot_times = grid.numbers("snapshot_times", {});
  c.grid.steady = grid.boolean("steady", c.grid.steady);
  c.grid.tol = grid.number("tol", c.grid.tol);
  c.grid.check_interval = grid.number("check_interval", c.grid.check_interval);
  c.grid.ny = grid.count("ny", c.grid.ny);
  c.grid.initial = grid.texts("initial");

  const Section cmp(top.get("compare"), "compare",
                    {"reference", "bins", "n_paths", "horizon", "burn_in", "delta", "l1_threshold"});
  c.compare.reference = cmp.text("reference", c.compare.reference);
  if (c.compare.reference != "stationary" && c.compare.reference != "evolve") {
    fail("compare.reference", "must be stationary or evolve");
  }
  c.compare.bins = cmp.count("bins", c.compare.bins);
  c.compare.n_paths = cmp.count("n_paths", c.compare.n_paths);
  c.compare.horizon = cmp.number("horizon", c.compare.horizon);
  c.compare.burn_in = cmp.number("burn_in", c.compare.burn_in);
  c.compare.delta = cmp.number("delta", c.compare.delta);
  c.compare.l1_threshold = cmp.number("l1_threshold", c.compare.l1_threshold);

  const Section hor(top.get("hormander"), "hormander", {"points", "depth", "tol"});
  if (const YAML::Node pts = hor.get("points")) {
    if (!pts.IsSequence()) fail("hormander.points", "expected a list of points");
    for (const auto& p : pts) c.hormander.points.push_back(Section::as_numbers(p, "hormander.points"));
  }
  c.hormander.depth = static_cast<int>(hor.count("depth", static_cast<std::size_t>(c.hormander.depth), 0));
  c.hormander.tol = hor.number("tol", c.hormander.tol);

  const Section pop(top.get("population"), "population", {"runs", "horizon", "initial_sizes", "snapshot_times"});
  c.population.runs = pop.count("runs", c.population.runs);
  c.population.horizon = pop.number("horizon", c.population.horizon);
  c.population.initial_sizes = pop.numbers("initial_sizes", c.population.initial_sizes);
  c.population.snapshot_times = pop.numbers("snapshot_times", {});

  const Section exp(top.get("experiment"), "experiment", {"name", "settings"});
  c.experiment.name = exp.text("name", "");
  c.experiment.settings = parse_record(exp.get("settings"), "experiment.settings");

  if (c.command == "experiment" && c.experiment.name.empty()) fail("experiment.name", "required for experiment runs");
  if (c.command != "experiment" && c.model.name.empty()) fail("model.name", "required");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig c = parse_config(read_text_file(path));
  c.base_dir = path.parent_path();
  return c;
}

std::string to_yaml(const ExperimentConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "command" << YAML::Value << c.command;
  e << YAML::Key << "seed" << YAML::Value << std::to_string(c.seed);
  e << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << c.output;
  e << YAML::Key << "threads" << YAML::Value << std::to_string(c.threads);

  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << c.model.name;
  e << YAML::Key << "params" << YAML::Value;
  emit_record(e, c.model.params);
  e << YAML::EndMap;

  const auto& s = c.simulate;
  e << YAML::Key << "simulate" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "n_paths" << YAML::Value << std::to_string(s.n_paths);
  e << YAML::Key << "horizon" << YAML::Value;
  emit_number(e, s.horizon);
  if (s.initial_state) {
    e << YAML::Key << "initial_state" << YAML::Value;
    emit_numbers(e, *s.initial_state);
  }
  e << YAML::Key << "initial_regime" << YAML::Value << std::to_string(s.initial_regime);
  e << YAML::Key << "snapshot_times" << YAML::Value;
  emit_numbers(e, s.snapshot_times);
  e << YAML::Key << "trajectories" << YAML::Value << s.trajectories;
  e << YAML::Key << "max_jumps" << YAML::Value << std::to_string(s.max_jumps);
  e << YAML::EndMap;

  const auto& g = c.grid;
  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "n" << YAML::Value << std::to_string(g.n);
  if (g.x_min) {
    e << YAML::Key << "x_min" << YAML::Value;
    emit_number(e, *g.x_min);
  }
  if (g.x_max) {
    e << YAML::Key << "x_max" << YAML::Value;
    emit_number(e, *g.x_max);
  }
  e << YAML::Key << "dt" << YAML::Value;
  emit_number(e, g.dt);
  e << YAML::Key << "t_end" << YAML::Value;
  emit_number(e, g.t_end);
  e << YAML::Key << "snapshot_times" << YAML::Value;
  emit_numbers(e, g.snapshot_times);
  e << YAML::Key << "steady" << YAML::Value << g.steady;
  e << YAML::Key << "tol" << YAML::Value;
  emit_number(e, g.tol);
  e << YAML::Key << "check_interval" << YAML::Value;
  emit_number(e, g.check_interval);
  e << YAML::Key << "ny" << YAML::Value << std::to_string(g.ny);
  e << YAML::Key << "initial" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& t : g.initial) e << YAML::DoubleQuoted << t;
  e << YAML::EndSeq;
  e << YAML::EndMap;

  const auto& m = c.compare;
  e << YAML::Key << "compare" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "reference" << YAML::Value << m.reference;
  e << YAML::Key << "bins" << YAML::Value << std::to_string(m.bins);
  e << YAML::Key << "n_paths" << YAML::Value << std::to_string(m.n_paths);
  e << YAML::Key << "horizon" << YAML::Value;
  emit_number(e, m.horizon);
  e << YAML::Key << "burn_in" << YAML::Value;
  emit_number(e, m.burn_in);
  e << YAML::Key << "delta" << YAML::Value;
  emit_number(e, m.delta);
  e << YAML::Key << "l1_threshold" << YAML::Value;
  emit_number(e, m.l1_threshold);
  e << YAML::EndMap;

  e << YAML::Key << "hormander" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : c.hormander.points) emit_numbers(e, p);
  e << YAML::EndSeq;
  e << YAML::Key << "depth" << YAML::Value << std::to_string(c.hormander.depth);
  e << YAML::Key << "tol" << YAML::Value;
  emit_number(e, c.hormander.tol);
  e << YAML::EndMap;

  const auto& p = c.population;
  e << YAML::Key << "population" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "runs" << YAML::Value << std::to_string(p.runs);
  e << YAML::Key << "horizon" << YAML::Value;
  emit_number(e, p.horizon);
  e << YAML::Key << "initial_sizes" << YAML::Value;
  emit_numbers(e, p.initial_sizes);
  e << YAML::Key << "snapshot_times" << YAML::Value;
  emit_numbers(e, p.snapshot_times);
  e << YAML::EndMap;

  e << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << c.experiment.name;
  e << YAML::Key << "settings" << YAML::Value;
  emit_record(e, c.experiment.settings);
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace pdmp::app
