#pragma once

#include "risklab/dataset.hpp"
#include "risklab/experiments.hpp"
#include "risklab/net.hpp"
#include "risklab/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace risklab {

struct NetworkConfig {
    std::vector<std::size_t> widths = {16, 32, 32};
    bool batchnorm = true;
    Activation activation = Activation::relu;
    // poly only: either explicit coefficients (shared by every activation
    // layer) or a degree to fit per layer at run time
    std::vector<double> poly_coeffs;
    double poly_halfwidth = 1.0;
    int poly_degree = 4;
};

struct DatasetConfig {
    std::string kind = "synthetic"; // "synthetic" | "cifar10"
    bool random_labels = false;
    // synthetic
    SyntheticSpec synthetic;
    // cifar10
    std::string path;
    std::size_t n_train = 0; // 0 = all
    std::size_t n_test = 0;
    bool normalize = true;
};

// Parameters of whichever protocol the config drives; only the active
// protocol's fields are consumed.
struct ProtocolParams {
    StagedSgdConfig staged;
    BranchingConfig branching;
    FlatnessConfig flatness;
    SweepConfig sweep;
    // flatness: optional starting model; when empty, a model is first
    // trained with the optimizer settings
    std::string model_snapshot;
    // interpolate
    std::string snapshot_a, snapshot_b;
    std::vector<double> ratios = {0.0, 0.25, 0.5, 0.75, 1.0};
    // optional post-train probes for the train protocol
    std::vector<double> perturb_multipliers;
    std::size_t perturb_seeds = 5;
    std::vector<double> volume_radii;
    double volume_threshold = 0.0;
    std::size_t volume_samples = 200;
};

struct ExperimentConfig {
    std::string protocol; // train | stage-sgd | branch-bgd | flatness |
                          // interpolate | sweep
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out; // optional; the CLI flag overrides
    NetworkConfig network;
    DatasetConfig dataset;
    TrainOptions optimizer;
    ProtocolParams params;
    std::string canonical; // sorted-key JSON echo of the parsed document
};

// Strict parse: unknown keys anywhere are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical echo.
std::string config_hash(const ExperimentConfig& cfg);

// Replaces the master seed, keeping the canonical echo (and so the config
// hash) in sync.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

Dataset build_dataset(const DatasetConfig& cfg, std::uint64_t seed);

// Network from config + dataset geometry. A poly activation with explicit
// coefficients is applied directly; a degree-only poly config starts as
// the ReLU spec and is fitted by the runner after initialization.
NetworkSpec build_network_spec(const NetworkConfig& cfg, const Dataset& data);

} // namespace risklab
