// pdmp: batch driver. Reads a YAML config, runs the command, writes
// artifacts and prints a JSON summary to stdout.
//
// Exit status: 0 success, 1 run error, 2 config error, 3 thresholds missed.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pdmp/error.hpp"
#include "pdmp_app/commands.hpp"
#include "pdmp_app/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Piecewise deterministic Markov process toolkit"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "YAML experiment config")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out, "override the output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    pdmp::app::ExperimentConfig config = pdmp::app::load_config(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output = *out;
    if (threads) config.threads = *threads;
    const pdmp::app::RunOutcome outcome = pdmp::app::run(config);
    std::cout << outcome.summary;
    return outcome.pass ? 0 : 3;
  } catch (const pdmp::Error& e) {
    std::cout << pdmp::app::error_json(e);
    return e.kind() == pdmp::ErrorKind::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cout << pdmp::app::error_json(e);
    return 1;
  }
}
