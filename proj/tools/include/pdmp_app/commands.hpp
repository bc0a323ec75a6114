#pragma once

#include <exception>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pdmp/density.hpp"
#include "pdmp_app/config.hpp"

namespace pdmp::app {

struct RunOutcome {
  std::vector<std::filesystem::path> artifacts;
  /// Machine-readable summary (JSON object, schema_version 1).
  std::string summary;
  bool pass = true;  ///< false when a compare or experiment run misses its thresholds
};

/// Executes `config.command`, writing artifacts under `config.output`.
/// Errors propagate as pdmp::Error.
RunOutcome run(const ExperimentConfig& config);

/// {"schema_version":1,"error":kind,"key":...,"message":...}
std::string error_json(const std::exception& e);

/// A density solver set up from the model and grid sections. Besides the
/// switching models and the cell-cycle models, the pseudo-model
/// "transport" (parameter g) gives a plain Liouville solver.
struct SolverSetup {
  std::unique_ptr<density::Evolver> evolver;
  density::DensityGrid initial;
  std::string kind;  ///< liouville | switching | cell_cycle | two_phase
};
SolverSetup make_solver(const ModelSection& model, const GridSection& grid);

/// Runs the solver to grid.t_end, or to steady state when grid.steady is set.
struct EvolveResult {
  std::vector<density::DensityGrid> snapshots;  ///< one per output time, last is final
  bool converged = false;
  double residual = 0.0;
};
EvolveResult evolve(const SolverSetup& setup, const GridSection& grid);

}  // namespace pdmp::app
