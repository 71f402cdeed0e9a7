#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dlab {

/// A batch experiment: kind selects the laboratory, params the kind-specific
/// block. Parameters are fully validated (unknown keys rejected) before any
/// output is produced.
struct ExperimentConfig {
    std::string kind;  ///< ode | wave1d | wave2d | wavepacket | transform | lemma-init | nonmatching
    nlohmann::json params;
    std::filesystem::path out_dir;
    std::string preset_name;  ///< informational, may be empty
};

/// Built-in experiment presets as (name, {"kind":..., "params":...}) pairs.
std::vector<std::pair<std::string, nlohmann::json>> presets();
nlohmann::json preset_config(const std::string& name);

/// Throws std::invalid_argument on schema violations.
void validate_params(const std::string& kind, const nlohmann::json& params);

/// Runs the experiment, writes CSV artifacts and report.json under out_dir,
/// and returns the report. Validation errors -> std::invalid_argument;
/// numeric failures -> std::runtime_error.
nlohmann::json run_experiment(const ExperimentConfig& cfg);

}  // namespace dlab
