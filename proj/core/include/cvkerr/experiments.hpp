#pragma once

#include <filesystem>
#include <optional>

#include "cvkerr/teleport.hpp"

namespace cvkerr {

struct ExperimentConfig {
    std::string experiment;
    int dim = 60;
    std::optional<GridSpec> grid;      // default: self-dual 1024-point grid
    double t = 1e-3;
    /// "coherent:<amp>" or "fock:<c0>,<c1>,..." (real coefficients, normalized).
    std::string input_state = "coherent:1";
    SchemeKind scheme = SchemeKind::first_order;
    ProtocolMode mode = ProtocolMode::direct;
    int repetitions = 1;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;     // empty: ./cvkerr_out/<experiment>
    int jobs = 1;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);

struct ExperimentReport {
    nlohmann::ordered_json data;       // full report as written to report.json
    double epsilon = 0.0;
    double log10_epsilon = 0.0;
    bool tolerance_ok = true;          // reference-level checks, when anchored
    std::vector<std::filesystem::path> files;
};

/// Registered experiment names with one-line descriptions.
std::vector<std::pair<std::string, std::string>> list_experiments();

/// Runs a registered experiment, writes report.json (plus wavefunction CSVs
/// and, for protocol modes, transcript.json) under the output directory.
ExperimentReport run_experiment(const ExperimentConfig& config);

FockState parse_input_state(const std::string& spec, int dim);

}  // namespace cvkerr
