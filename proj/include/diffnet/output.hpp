#pragma once

#include <string>

#include "diffnet/harness.hpp"

#include <json.hpp>

namespace diffnet {

struct OutputPaths {
    std::string directory;
    std::string curves_csv;
    std::string summary_json;
    std::string manifest_json;
    std::string weights_csv;  // empty when weight logging was off
};

// Lossless round-trip decimal formatting (17 significant digits).
std::string format_float(double v);

// Writes curves.csv, summary.json, manifest.json and (when trajectories
// were logged) weights.csv into cfg.out_dir, creating it if needed.
OutputPaths emit_results(const RunResult& result, const ExperimentConfig& cfg);

// Prediction record as printed by the `theory` subcommand.
nlohmann::json prediction_json(const SteadyStatePrediction& prediction);

nlohmann::json summary_json(const RunResult& result);
nlohmann::json manifest_json(const RunResult& result, const ExperimentConfig& cfg);

}  // namespace diffnet
