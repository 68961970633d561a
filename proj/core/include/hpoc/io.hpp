#pragma once

#include <string>

#include "hpoc/adapt.hpp"

namespace hpoc::io {

/// Fills the problem's default initial mesh and solver settings for a named
/// built-in problem ("burgers" or "heat"). Throws on unknown names.
adapt::RunConfig default_config(const std::string& problem_name);

/// Overlays settings from a JSON config file onto `config`. Unknown keys are
/// rejected.
void apply_config_file(adapt::RunConfig& config, const std::string& path);

problem::ProblemDefinition make_problem(const adapt::RunConfig& config);

/// Writes summary.json, solution_state.csv, controls.csv, mesh_history.json
/// and (optionally) plot-ready surface/curve data under `dir`.
void write_outputs(const adapt::RunHistory& history,
                   const adapt::RunConfig& config, const std::string& dir);

std::string strategy_name(adapt::Strategy s);
adapt::Strategy strategy_from_name(const std::string& name);

}  // namespace hpoc::io
