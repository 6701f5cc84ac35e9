#include "risklab/trainer.hpp"

#include "risklab/errors.hpp"
#include "risklab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace risklab {

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "sgd") return TrainMode::sgd;
    if (s == "bgd") return TrainMode::bgd;
    throw UsageError("unknown train mode: " + s + " (expected sgd or bgd)");
}

std::string to_string(TrainMode m) { return m == TrainMode::sgd ? "sgd" : "bgd"; }

PerturbMode perturb_mode_from_string(const std::string& s) {
    if (s == "layer-std") return PerturbMode::layer_std;
    if (s == "mean-magnitude") return PerturbMode::mean_magnitude;
    throw UsageError("unknown perturbation mode: " + s +
                     " (expected layer-std or mean-magnitude)");
}

std::string to_string(PerturbMode m) {
    return m == PerturbMode::layer_std ? "layer-std" : "mean-magnitude";
}

WeightSnapshot perturb(const WeightSnapshot& w, double c, PerturbMode mode,
                       std::uint64_t seed) {
    if (c < 0.0) throw UsageError("perturbation multiplier must be >= 0");
    WeightSnapshot out = w;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", c);
    out.metadata["perturb.c"] = buf;
    out.metadata["perturb.mode"] = to_string(mode);
    out.metadata["perturb.seed"] = std::to_string(seed);
    if (c == 0.0) return out;

    Rng rng(seed);
    for (auto& a : out.arrays()) {
        if (!a.trainable) continue;
        const double scale = mode == PerturbMode::layer_std ? stddev_of(a.value.values())
                                                            : mean_abs_of(a.value.values());
        const double sigma = c * scale;
        for (double& v : a.value.values()) v += rng.gaussian(0.0, sigma);
    }
    return out;
}

EpochRecord measure(const Network& net, const WeightSnapshot& w, const Dataset& data,
                    LossKind loss, std::size_t epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const auto train = net.evaluate(w, data.train_x, data.train_y, loss);
    rec.train_loss = train.loss;
    rec.train_error_pct = train.error_pct;
    if (data.test_size() > 0) {
        const auto test = net.evaluate(w, data.test_x, data.test_y, loss);
        rec.test_loss = test.loss;
        rec.test_error_pct = test.error_pct;
    } else {
        rec.test_loss = std::numeric_limits<double>::quiet_NaN();
        rec.test_error_pct = std::numeric_limits<double>::quiet_NaN();
    }
    return rec;
}

namespace {

void apply_step(WeightSnapshot& w, const WeightSnapshot& grads, double lr) {
    for (const auto& g : grads.arrays()) {
        auto& t = w.get(g.name).value;
        const auto& gv = g.value.values();
        auto& tv = t.values();
        for (std::size_t i = 0; i < tv.size(); ++i) tv[i] -= lr * gv[i];
    }
}

void fold_running_stats(WeightSnapshot& w, const std::vector<std::string>& labels,
                        const std::vector<Tensor>& mean, const std::vector<Tensor>& var,
                        double momentum) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& rm = w.get(labels[i] + ".bn.running_mean").value.values();
        auto& rv = w.get(labels[i] + ".bn.running_var").value.values();
        const auto& bm = mean[i].values();
        const auto& bv = var[i].values();
        for (std::size_t k = 0; k < rm.size(); ++k) {
            rm[k] = (1.0 - momentum) * rm[k] + momentum * bm[k];
            rv[k] = (1.0 - momentum) * rv[k] + momentum * bv[k];
        }
    }
}

} // namespace

TrainResult train(const Network& net, WeightSnapshot start, const Dataset& data,
                  const TrainOptions& opt, const EpochHook& hook) {
    const std::size_t n = data.train_size();
    if (n == 0) throw UsageError("training requires a non-empty train split");
    net.check_labels(data.train_y);

    const std::vector<std::size_t> sshape = data.sample_shape();
    const std::size_t d = sshape[0] * sshape[1] * sshape[2];
    const std::vector<std::string> norm_labels = net.norm_labels();

    TrainResult result;
    result.weights = std::move(start);
    WeightSnapshot& w = result.weights;

    double lr = opt.resume_lr > 0.0 ? opt.resume_lr : opt.lr;
    double prev_loss = opt.resume_prev_loss;
    // lr 0 is the degenerate no-update run: weights and running statistics
    // come out bit-for-bit unchanged
    if (lr < 0.0) throw UsageError("learning rate must be >= 0");

    const std::size_t batch =
        opt.mode == TrainMode::bgd ? n : std::min(opt.batch_size == 0 ? n : opt.batch_size, n);

    if (opt.start_epoch == 0 && opt.eval_every > 0) {
        result.history.push_back(measure(net, w, data, opt.loss, 0));
    }
    if (opt.snapshot_every > 0) {
        result.snapshots.push_back({opt.start_epoch, w});
    }

    std::vector<Tensor> bn_mean, bn_var;
    WeightSnapshot grads;
    Tensor bx({batch, sshape[0], sshape[1], sshape[2]});
    std::vector<int> by(batch);
    std::size_t last_epoch = opt.start_epoch;

    for (std::size_t epoch = opt.start_epoch + 1; epoch <= opt.epochs; ++epoch) {
        if (opt.mode == TrainMode::bgd) {
            const double loss = net.loss_and_grad(w, data.train_x, data.train_y, opt.loss,
                                                  &grads, &bn_mean, &bn_var);
            if (!std::isfinite(loss)) {
                result.diverged = true;
                break;
            }
            if (opt.lr_halving && prev_loss >= 0.0 && loss > prev_loss) lr *= 0.5;
            prev_loss = loss;
            if (lr != 0.0) {
                apply_step(w, grads, lr);
                fold_running_stats(w, norm_labels, bn_mean, bn_var, opt.bn_momentum);
            }
        } else {
            // batch order depends only on (seed, epoch): resumable
            Rng perm_rng(derive_seed(opt.seed, epoch));
            const std::vector<std::size_t> perm = perm_rng.permutation(n);
            for (std::size_t pos = 0; pos < n; pos += batch) {
                const std::size_t cnt = std::min(batch, n - pos);
                if (cnt != bx.dim(0)) {
                    bx = Tensor({cnt, sshape[0], sshape[1], sshape[2]});
                    by.resize(cnt);
                }
                for (std::size_t i = 0; i < cnt; ++i) {
                    std::memcpy(bx.data() + i * d, data.train_x.data() + perm[pos + i] * d,
                                d * sizeof(double));
                    by[i] = data.train_y[perm[pos + i]];
                }
                const double loss =
                    net.loss_and_grad(w, bx, by, opt.loss, &grads, &bn_mean, &bn_var);
                if (!std::isfinite(loss)) {
                    result.diverged = true;
                    break;
                }
                if (lr != 0.0) {
                    apply_step(w, grads, lr);
                    fold_running_stats(w, norm_labels, bn_mean, bn_var, opt.bn_momentum);
                }
            }
            if (result.diverged) break;
        }

        last_epoch = epoch;
        if (opt.snapshot_every > 0 &&
            (epoch % opt.snapshot_every == 0 || epoch == opt.epochs)) {
            result.snapshots.push_back({epoch, w});
        }
        bool evaluated = false;
        if (opt.eval_every > 0 && (epoch % opt.eval_every == 0 || epoch == opt.epochs)) {
            result.history.push_back(measure(net, w, data, opt.loss, epoch));
            evaluated = true;
        }
        if (hook) hook(EpochState{epoch, w, lr, prev_loss});
        if (opt.stop_at_zero_train && evaluated &&
            result.history.back().train_error_pct == 0.0) {
            break;
        }
    }

    if (opt.snapshot_every > 0 && result.snapshots.back().epoch != last_epoch) {
        result.snapshots.push_back({last_epoch, w});
    }
    result.final_lr = lr;
    result.prev_full_loss = prev_loss;
    return result;
}

} // namespace risklab
