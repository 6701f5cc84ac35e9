#pragma once

#include "risklab/config.hpp"

#include <string>

namespace risklab {

// Runs one config-driven protocol end to end: builds the dataset and
// network, executes, and writes CSV results, snapshots and the manifest
// into out_dir. Deterministic: the same config and seed produce the same
// bytes (manifest timestamp aside). Throws UsageError for config-level
// problems, std::runtime_error for runtime failures.
void run_protocol(const ExperimentConfig& cfg, const std::string& out_dir);

} // namespace risklab
