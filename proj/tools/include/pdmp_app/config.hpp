#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/process.hpp"

namespace pdmp::app {

struct ModelSection {
  std::string name;
  ParamRecord params;
  bool operator==(const ModelSection&) const = default;
};

struct SimulateSection {
  std::size_t n_paths = 1;
  double horizon = 10.0;
  std::optional<std::vector<double>> initial_state;  ///< default: the catalog's starting state
  int initial_regime = 0;
  std::vector<double> snapshot_times;
  bool trajectories = true;
  std::size_t max_jumps = 10'000'000;
  bool operator==(const SimulateSection&) const = default;
};

/// Density-solver settings, also used for stationary-density output.
struct GridSection {
  std::size_t n = 128;
  std::optional<double> x_min;  ///< default: the model's natural domain
  std::optional<double> x_max;
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<double> snapshot_times;  ///< default: t_end only
  bool steady = false;                 ///< stop early once converged
  double tol = 1e-8;
  double check_interval = 1.0;
  std::size_t ny = 10;
  std::vector<std::string> initial;  ///< per-regime initial density, normalized to total mass 1
  bool operator==(const GridSection&) const = default;
};

struct CompareSection {
  std::string reference = "stationary";  ///< stationary | evolve
  std::size_t bins = 50;
  std::size_t n_paths = 1;
  double horizon = 1e5;
  double burn_in = 0.5;
  double delta = 1.0;
  double l1_threshold = 0.03;
  bool operator==(const CompareSection&) const = default;
};

struct HormanderSection {
  std::vector<std::vector<double>> points;
  int depth = 3;
  double tol = 1e-8;
  bool operator==(const HormanderSection&) const = default;
};

struct PopulationSection {
  std::size_t runs = 1;
  double horizon = 5.0;
  std::vector<double> initial_sizes{1.0};
  std::vector<double> snapshot_times;
  bool operator==(const PopulationSection&) const = default;
};

struct ExperimentSection {
  std::string name;
  ParamRecord settings;
  bool operator==(const ExperimentSection&) const = default;
};

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::string output = "out";
  unsigned threads = 1;
  ModelSection model;
  SimulateSection simulate;
  GridSection grid;
  CompareSection compare;
  HormanderSection hormander;
  PopulationSection population;
  ExperimentSection experiment;
  /// Directory of the file the config came from; not serialized.
  std::filesystem::path base_dir;

  bool operator==(const ExperimentConfig& o) const;
};

const std::vector<std::string>& command_names();

/// Parses YAML text. Unknown keys, wrong types and unknown commands throw
/// ConfigError naming the key (dotted path).
ExperimentConfig parse_config(const std::string& yaml);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full YAML rendering with every field; parse(to_yaml(c)) == c.
std::string to_yaml(const ExperimentConfig& config);

}  // namespace pdmp::app
