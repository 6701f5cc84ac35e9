#pragma once

#include "risklab/dataset.hpp"
#include "risklab/net.hpp"
#include "risklab/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace risklab {

// One trained trajectory inside a protocol.
struct TrajectoryRun {
    std::string id;
    std::uint64_t seed = 0;        // shuffle seed handed to train()
    bool from_perturbation = false;
    TrainResult result;
};

// ---------------------------------------------------------------------
// Staged parallel SGD: each stage runs several SGD trajectories for a few
// epochs; the first half start from the final model P of the previous
// stage's first trajectory, the rest from perturb(P, restart_noise).

struct StagedSgdConfig {
    std::size_t stages = 12;
    std::size_t trajectories_per_stage = 8;
    std::size_t epochs_per_stage = 10;
    std::size_t batch_size = 100;
    double lr = 0.01;
    double restart_noise = 0.01; // layer-std multiplier for the perturbed half
    LossKind loss = LossKind::cross_entropy;
    std::size_t snapshot_every = 1; // trajectory points kept for embedding
    std::uint64_t seed = 1;
};

struct StagedSgdResult {
    std::vector<TrajectoryRun> trajectories; // stage-major order
    std::vector<std::string> failures;       // "<id>: <reason>", siblings continue
};

StagedSgdResult staged_parallel_sgd(const Network& net, const Dataset& data,
                                    const StagedSgdConfig& cfg);

// ---------------------------------------------------------------------
// BGD branching: run a main BGD trajectory, perturb it at chosen epochs
// with several noise multipliers, continue each branch to the same
// horizon, and evaluate the per-epoch averaged model (midpoint of main
// and branch) on the full training set.

struct BranchingConfig {
    std::vector<std::size_t> branch_epochs = {0, 10, 50, 200};
    std::vector<double> multipliers = {0.25, 0.5, 1.0};
    std::size_t epochs = 400;
    double lr = 0.05;
    bool lr_halving = true;
    LossKind loss = LossKind::cross_entropy;
    PerturbMode mode = PerturbMode::layer_std;
    std::size_t eval_every = 1;
    std::uint64_t seed = 1;
};

struct InterpPoint {
    std::size_t epoch = 0;
    double error_pct = 0.0;
    double loss = 0.0;
};

struct BranchRecord {
    std::string parent_id = "main";
    std::size_t branch_epoch = 0;
    double multiplier = 0.0;
    TrajectoryRun branch;
    // averaged model between main and branch, epoch by epoch, evaluated on
    // the training set with re-estimated normalization statistics
    std::vector<InterpPoint> midpoints;
};

struct BranchingResult {
    TrajectoryRun main;
    std::vector<BranchRecord> branches;
};

BranchingResult bgd_branching(const Network& net, const Dataset& data,
                              const BranchingConfig& cfg);

// ---------------------------------------------------------------------
// Flatness probe: perturb a (typically zero-error) model several times,
// retrain each repeat with BGD, and compare the final models through
// conditional-correctness similarity against a random reference model.

struct SimilarityMatrices {
    std::size_t n = 0;
    std::vector<std::string> labels;
    std::vector<double> p_cc; // row-major; P(col correct | row correct)
    std::vector<double> p_ii; // row-major; P(col incorrect | row incorrect)
    // entries are NaN when the conditioning event is empty
    double cc(std::size_t i, std::size_t j) const { return p_cc[i * n + j]; }
    double ii(std::size_t i, std::size_t j) const { return p_ii[i * n + j]; }
};

// Conditional frequencies from per-sample correctness indicators.
SimilarityMatrices similarity_matrices(const Network& net,
                                       const std::vector<const WeightSnapshot*>& models,
                                       const Tensor& x, const std::vector<int>& y,
                                       std::vector<std::string> labels = {});

struct FlatnessConfig {
    double noise = 0.1; // multiplier c
    PerturbMode mode = PerturbMode::layer_std;
    std::size_t repeats = 4;
    std::size_t retrain_epochs = 100;
    double lr = 0.05;
    bool lr_halving = true;
    LossKind loss = LossKind::cross_entropy;
    std::size_t eval_every = 1;
    std::size_t snapshot_every = 0;
    std::uint64_t seed = 1;
};

struct FlatnessResult {
    std::vector<TrajectoryRun> repeats;
    WeightSnapshot reference; // the random reference model
    // final repeat models plus the reference, on the test split when
    // present, else the train split
    SimilarityMatrices similarity;
};

FlatnessResult flatness_probe(const Network& net, const WeightSnapshot& model,
                              const Dataset& data, const FlatnessConfig& cfg);

// ---------------------------------------------------------------------
// Weight-space interpolation: model(r) = (1-r)*a + r*b per trainable
// array, normalization statistics re-estimated on the training set before
// each evaluation (the endpoints go through the same pipeline).

struct InterpolationPoint {
    double ratio = 0.0;
    double train_error_pct = 0.0;
    double train_loss = 0.0;
    double test_error_pct = 0.0; // NaN when the split is empty
    double test_loss = 0.0;
};

std::vector<InterpolationPoint> interpolate_models(const Network& net,
                                                   const WeightSnapshot& a,
                                                   const WeightSnapshot& b,
                                                   const Dataset& data,
                                                   const std::vector<double>& ratios,
                                                   LossKind loss);

// ---------------------------------------------------------------------
// Immediate post-perturbation error, averaged over seeds, per multiplier.

struct PerturbationPoint {
    double multiplier = 0.0;
    double mean_error_pct = 0.0;
    double mean_loss = 0.0;
    std::vector<double> per_seed_error_pct;
    std::vector<double> per_seed_loss;
};

std::vector<PerturbationPoint> perturbation_sweep(const Network& net,
                                                  const WeightSnapshot& model,
                                                  const Dataset& data,
                                                  const std::vector<double>& multipliers,
                                                  std::size_t n_seeds, PerturbMode mode,
                                                  LossKind loss, std::uint64_t seed);

// ---------------------------------------------------------------------
// Monte-Carlo sublevel-set probe: fraction of layer-std perturbations at
// each radius whose full-train loss stays below the threshold.

struct VolumePoint {
    double radius = 0.0;
    double acceptance = 0.0;
};

std::vector<VolumePoint> sublevel_volume_probe(const Network& net,
                                               const WeightSnapshot& model,
                                               const Dataset& data,
                                               const std::vector<double>& radii,
                                               double loss_threshold,
                                               std::size_t samples_per_radius,
                                               LossKind loss, std::uint64_t seed);

// ---------------------------------------------------------------------
// Width/size sweep with optional random labels.

struct SweepConfig {
    std::vector<std::size_t> base_widths = {8, 16, 16};
    std::vector<double> width_multipliers = {1.0, 2.0, 4.0};
    std::vector<std::size_t> train_sizes = {500};
    bool random_labels = false;
    bool batchnorm = true;
    TrainOptions train; // per-configuration budget
    std::uint64_t seed = 1;
};

struct SweepRow {
    double width_multiplier = 0.0;
    std::size_t train_size = 0;
    bool random_labels = false;
    std::size_t parameters = 0;
    bool diverged = false;
    double train_error_pct = 0.0;
    double train_loss = 0.0;
    double test_error_pct = 0.0;
    double test_loss = 0.0;
};

std::vector<SweepRow> generalization_sweep(const Dataset& data, const SweepConfig& cfg);

// ---------------------------------------------------------------------
// Per-activation-layer polynomial fits: each activation layer gets the
// ReLU minimax fit of the given degree on [-B, B], B = 3x the standard
// deviation of that layer's pre-activations on the calibration batch
// (B = 1 when the spread is zero).
std::vector<PolyActivation> calibrate_poly_activations(const Network& relu_net,
                                                       const WeightSnapshot& w,
                                                       const Tensor& calib_x, int degree);

} // namespace risklab
