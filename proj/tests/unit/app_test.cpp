#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "pdmp/catalog.hpp"
#include "pdmp/error.hpp"
#include "pdmp/io.hpp"
#include "pdmp_app/commands.hpp"
#include "pdmp_app/config.hpp"

namespace pdmp::app {
namespace {

namespace fs = std::filesystem;

const fs::path kExamples = fs::path(PDMP_CONFIG_DIR) / "examples";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pdmp_app_test_" + name);
  fs::remove_all(p);
  return p;
}

template <class Fn>
std::string config_error_key(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << e.what();
    return e.key();
  }
  ADD_FAILURE() << "expected ConfigError";
  return {};
}

TEST(Config, RoundTripsEveryShippedConfig) {
  int n = 0;
  for (const auto& dir : {kExamples, fs::path(PDMP_CONFIG_DIR) / "acceptance"}) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".yaml") continue;
      const ExperimentConfig c = parse_config(read_text_file(entry.path()));
      const ExperimentConfig back = parse_config(to_yaml(c));
      EXPECT_TRUE(back == c) << entry.path();
      EXPECT_EQ(to_yaml(back), to_yaml(c));
      ++n;
    }
  }
  EXPECT_GE(n, 20);
}

TEST(Config, RoundTripKeepsExtremeValues) {
  ExperimentConfig c;
  c.command = "simulate";
  c.seed = std::numeric_limits<std::uint64_t>::max();
  c.model = {"gene_expression", {{"P", 0.1 + 0.2}, {"q0", std::string("1 + x")}}};
  c.simulate.horizon = 1.0 / 3.0;
  c.simulate.initial_state = std::vector<double>{1e-300};
  const ExperimentConfig back = parse_config(to_yaml(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(Config, UnknownKeysAreNamed) {
  EXPECT_EQ(config_error_key([] { parse_config("command: simulate\nmodle: {name: telegraph}\n"); }), "modle");
  EXPECT_EQ(config_error_key([] { parse_config("command: simulate\nsimulate: {n_path: 3}\n"); }), "simulate.n_path");
  EXPECT_EQ(config_error_key([] { parse_config("command: simulate\nseed: -1\n"); }), "seed");
  EXPECT_EQ(config_error_key([] { parse_config("command: fly\n"); }), "command");
}

TEST(Catalog, ParameterRecordsAreChecked) {
  EXPECT_EQ(config_error_key([] { catalog::gene_params({{"Q", 1.0}}); }), "Q");
  EXPECT_EQ(config_error_key([] { catalog::telegraph_params({{"c", std::string("x")}}); }), "c");
  EXPECT_EQ(config_error_key([] { catalog::build_model("nope", {}); }), "model");
  const auto p = catalog::gene_params({{"q0", std::string("1 + x")}, {"P", 2.0}});
  EXPECT_DOUBLE_EQ(p.P, 2.0);
  EXPECT_DOUBLE_EQ(p.q0(0.5), 1.5);
  for (const auto& name : catalog::model_names()) {
    if (name == "population") continue;
    const PdmpModel m = catalog::build_model(name, {});
    const ProcessState s = catalog::default_initial_state(name, {});
    EXPECT_EQ(s.x.size(), m.dimension()) << name;
  }
}

TEST(Run, ClassifyStable) {
  ExperimentConfig c = load_config(kExamples / "classify_stable.yaml");
  c.output = scratch("classify").string();
  const RunOutcome out = run(c);
  const auto j = nlohmann::json::parse(read_text_file(fs::path(c.output) / "classification.json"));
  EXPECT_EQ(j["verdict"], "Stable");
  EXPECT_DOUBLE_EQ(j["r0"].get<double>(), -1.0);
  EXPECT_TRUE(out.pass);
}

TEST(Run, SimulateIsByteIdentical) {
  ExperimentConfig c = load_config(kExamples / "simulate_gene.yaml");
  c.output = scratch("sim_a").string();
  run(c);
  const std::string a = read_text_file(fs::path(c.output) / "trajectories.csv");
  c.output = scratch("sim_b").string();
  c.threads = 2;
  run(c);
  EXPECT_EQ(a, read_text_file(fs::path(c.output) / "trajectories.csv"));
  EXPECT_GT(a.size(), 100u);
}

TEST(Run, CompareGenePasses) {
  ExperimentConfig c = load_config(kExamples / "compare_gene_short.yaml");
  c.output = scratch("compare").string();
  const RunOutcome out = run(c);
  const auto j = nlohmann::json::parse(read_text_file(fs::path(c.output) / "fit_report.json"));
  EXPECT_LT(j["l1_distance"].get<double>(), j["l1_threshold"].get<double>());
  EXPECT_TRUE(out.pass);
}

TEST(Run, ErrorJsonNamesKindAndKey) {
  const auto j = nlohmann::json::parse(error_json(Error(ErrorKind::ConfigError, "bad", "grid.n")));
  EXPECT_EQ(j["error"], "ConfigError");
  EXPECT_EQ(j["key"], "grid.n");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PDMP_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  write_text_file(dir / "bad.yaml", "command: classify\nmodel: {name: birth_switch, params: {b9: 1}}\n");
  write_text_file(dir / "invalid.yaml", "command: classify\nmodel: {name: birth_switch, params: {b0: 3}}\n");
  EXPECT_EQ(run_cli("--config " + (kExamples / "classify_sweeping.yaml").string() + " --out " + (dir / "ok").string()),
            0);
  EXPECT_EQ(run_cli("--config " + (dir / "bad.yaml").string()), 2);
  EXPECT_EQ(run_cli("--config " + (dir / "invalid.yaml").string()), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "missing.yaml").string()), 1);
}

}  // namespace
}  // namespace pdmp::app
