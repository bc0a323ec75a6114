#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdmp/models.hpp"
#include "pdmp/population.hpp"
#include "pdmp/process.hpp"
#include "pdmp/switching.hpp"

namespace pdmp::catalog {

/// Model names accepted by `build_model`, plus "population".
const std::vector<std::string>& model_names();

// Typed parameter records from config values. Missing keys take the struct
// defaults; unknown keys and wrongly typed values throw ConfigError naming
// the key. Function-valued keys accept numbers or expressions in x.
models::GrasshopperParams grasshopper_params(const ParamRecord& r);
models::TelegraphParams telegraph_params(const ParamRecord& r);
models::OnePhaseCellCycleParams cell_cycle_1p_params(const ParamRecord& r);
models::RubinowParams rubinow_params(const ParamRecord& r);
models::TwoPhaseCellCycleParams cell_cycle_2p_params(const ParamRecord& r);
models::GeneExpressionParams gene_params(const ParamRecord& r);
models::SteinParams stein_params(const ParamRecord& r);
models::AlleeParams allee_params(const ParamRecord& r);
models::BirthSwitchParams birth_switch_params(const ParamRecord& r);
models::PopulationParams population_params(const ParamRecord& r);

/// Builds any PDMP in the catalog. Throws ConfigError for an unknown name.
PdmpModel build_model(const std::string& name, const ParamRecord& params);

/// A sensible starting state inside the model's state space.
ProcessState default_initial_state(const std::string& name, const ParamRecord& params);

/// The two-regime one-dimensional system behind a switching model, if the
/// model is one (gene_expression, birth_switch, allee).
std::optional<switching::SwitchingSystem1D> switching_system(const std::string& name, const ParamRecord& params);
/// Exact endpoint derivatives where known in closed form.
std::optional<switching::Derivatives> switching_derivatives(const std::string& name, const ParamRecord& params);

}  // namespace pdmp::catalog
