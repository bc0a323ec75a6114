#pragma once

#include <string>
#include <vector>

#include "pdmp_app/config.hpp"

namespace pdmp::app {

struct Check {
  std::string label;
  double value = 0.0;
  std::string relation;  ///< "<", "<=", ">", ">=", "in", "=="
  double threshold = 0.0;
  double threshold_hi = 0.0;  ///< upper end for "in"
  bool pass = false;
};

struct AuditRecord {
  std::string run;
  double max_defect = 0.0;
  double min_value = 0.0;
  std::size_t steps = 0;
};

struct ExperimentReport {
  std::string name;
  std::string title;
  std::vector<Check> checks;
  std::vector<AuditRecord> audits;  ///< every density-solver run made by the experiment
  double seconds = 0.0;
  bool pass() const;
};

const std::vector<std::string>& experiment_names();

/// Runs the experiment named in config.experiment with its settings. Unknown
/// names and settings throw ConfigError.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string to_json(const ExperimentReport& report);
/// "value < threshold" style rendering of one check.
std::string describe(const Check& check);

Check check_less(std::string label, double value, double threshold);
Check check_greater(std::string label, double value, double threshold);
Check check_between(std::string label, double value, double lo, double hi);
Check check_true(std::string label, bool ok);

}  // namespace pdmp::app
