#pragma once

#include "risklab/dataset.hpp"
#include "risklab/net.hpp"
#include "risklab/snapshot.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace risklab {

enum class TrainMode { sgd, bgd };

TrainMode train_mode_from_string(const std::string& s);
std::string to_string(TrainMode m);

enum class PerturbMode { layer_std, mean_magnitude };

PerturbMode perturb_mode_from_string(const std::string& s);
std::string to_string(PerturbMode m);

// Adds i.i.d. Gaussian noise to every trainable array: sigma = c * S
// (layer_std: S = that array's standard deviation) or sigma = c * m
// (mean_magnitude: m = that array's mean |w|). Running statistics are left
// untouched. c = 0 returns the input bit for bit. The result's metadata
// records c, mode and seed.
WeightSnapshot perturb(const WeightSnapshot& w, double c, PerturbMode mode,
                       std::uint64_t seed);

struct TrainOptions {
    TrainMode mode = TrainMode::sgd;
    LossKind loss = LossKind::cross_entropy;
    std::size_t epochs = 10;
    std::size_t batch_size = 100;  // ignored for bgd (always the full set)
    double lr = 0.01;
    // bgd only: halve the step size whenever the full-set loss of the
    // incoming weights exceeds the previous epoch's value.
    bool lr_halving = true;
    double bn_momentum = 0.1;
    // evaluate train/test metrics every k epochs (and always at the last);
    // 0 disables periodic evaluation.
    std::size_t eval_every = 1;
    std::uint64_t seed = 1;        // batch order; epoch permutations are
                                   // derived statelessly from (seed, epoch)
    // stop once a periodic evaluation shows 0% train error
    bool stop_at_zero_train = false;
    // keep a weight snapshot every k epochs (plus the starting weights and
    // the final epoch); 0 keeps none
    std::size_t snapshot_every = 0;
    // resume state
    std::size_t start_epoch = 0;
    double resume_lr = 0.0;         // 0 = use lr
    double resume_prev_loss = -1.0; // < 0 = none yet
};

struct EpochRecord {
    std::size_t epoch = 0; // metrics measured after this many epochs
    double train_loss = 0.0;
    double train_error_pct = 0.0;
    double test_loss = 0.0;      // NaN when the split is empty
    double test_error_pct = 0.0; // NaN when the split is empty
};

struct SnapshotPoint {
    std::size_t epoch = 0;
    WeightSnapshot weights;
};

struct TrainResult {
    WeightSnapshot weights;
    std::vector<EpochRecord> history;
    std::vector<SnapshotPoint> snapshots; // per opt.snapshot_every
    bool diverged = false;                // non-finite loss halted the run
    double final_lr = 0.0;
    double prev_full_loss = -1.0; // bgd halving state, for resume; < 0 = none
};

// Per-epoch training state as seen by hooks. lr and prev_full_loss are the
// values to feed TrainOptions resume_lr / resume_prev_loss so a run resumed
// from this point replays the remaining epochs bit for bit.
struct EpochState {
    std::size_t epoch = 0; // epochs completed (1-based)
    const WeightSnapshot& weights;
    double lr = 0.0;
    double prev_full_loss = -1.0; // < 0 = none yet (sgd, or before epoch 1)
};

// Called after every epoch; return value is ignored.
using EpochHook = std::function<void(const EpochState&)>;

// Plain SGD / batch gradient descent with batch-norm running statistics
// folded in after every step. Deterministic for a fixed option set: batch
// permutations depend only on (seed, epoch), so resuming from a snapshot
// at epoch k replays exactly the epochs a straight run would have taken.
TrainResult train(const Network& net, WeightSnapshot start, const Dataset& data,
                  const TrainOptions& opt, const EpochHook& hook = {});

// Error/loss pair on both splits at fixed weights (eval mode).
EpochRecord measure(const Network& net, const WeightSnapshot& w, const Dataset& data,
                    LossKind loss, std::size_t epoch);

} // namespace risklab
