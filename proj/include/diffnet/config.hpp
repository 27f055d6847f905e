#pragma once

#include <string>

#include "diffnet/harness.hpp"

namespace diffnet {

// Experiment configuration file: line-oriented sections of key = value
// pairs. Unknown sections, unknown keys and repeated keys are rejected
// with the offending line number.
//
//   [experiment]  iterations, runs, seed, tail_window, log_weights,
//                 probe_stationarity, threads
//   [topology]    type (ring|complete|random), nodes, edge_prob
//   [adjacency]   explicit neighbor lists, one "k: l1 l2 ..." line per node
//   [model]       dim, step, target_reg, mean_scale_min/max, var_min/max,
//                 calibration_tol, statistics_samples
//   [policies]    one policy per line: name [alpha1=x] [alpha2=y]
//   [output]      directory
//
// '#' starts a comment. Omitted keys keep their defaults.
ExperimentConfig parse_config(const std::string& path);

// Same grammar, from an in-memory string.
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace diffnet
