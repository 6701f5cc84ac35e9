#include "risklab/experiments.hpp"

#include "risklab/errors.hpp"
#include "risklab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace risklab {

namespace {

std::string stage_traj_id(std::size_t stage, std::size_t traj) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "stage%02zu.traj%02zu", stage + 1, traj + 1);
    return buf;
}

std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

StagedSgdResult staged_parallel_sgd(const Network& net, const Dataset& data,
                                    const StagedSgdConfig& cfg) {
    if (cfg.stages < 1 || cfg.trajectories_per_stage < 1 || cfg.epochs_per_stage < 1) {
        throw UsageError("staged SGD needs stages, trajectories and epochs all >= 1");
    }
    if (cfg.restart_noise < 0.0) throw UsageError("restart noise must be >= 0");

    Rng init_rng(derive_seed(cfg.seed, 0));
    WeightSnapshot parent = net.init(init_rng);

    StagedSgdResult out;
    const std::size_t p = cfg.trajectories_per_stage;
    const std::size_t direct = (p + 1) / 2; // the rest start perturbed

    for (std::size_t s = 0; s < cfg.stages; ++s) {
        const std::uint64_t stage_seed = derive_seed(cfg.seed, 1000 + s);
        for (std::size_t t = 0; t < p; ++t) {
            TrajectoryRun run;
            run.id = stage_traj_id(s, t);
            run.seed = derive_seed(stage_seed, t + 1);
            run.from_perturbation = t >= direct;

            WeightSnapshot start =
                run.from_perturbation
                    ? perturb(parent, cfg.restart_noise, PerturbMode::layer_std,
                              derive_seed(stage_seed, 500 + t))
                    : parent;

            TrainOptions opt;
            opt.mode = TrainMode::sgd;
            opt.loss = cfg.loss;
            opt.epochs = cfg.epochs_per_stage;
            opt.batch_size = cfg.batch_size;
            opt.lr = cfg.lr;
            opt.eval_every = 1;
            opt.snapshot_every = cfg.snapshot_every;
            opt.seed = run.seed;

            try {
                run.result = train(net, std::move(start), data, opt);
                if (run.result.diverged) {
                    out.failures.push_back(run.id + ": diverged (non-finite loss)");
                }
            } catch (const std::exception& e) {
                out.failures.push_back(run.id + ": " + e.what());
                run.result.diverged = true;
            }
            out.trajectories.push_back(std::move(run));
        }
        parent = out.trajectories[s * p].result.weights;
        if (parent.arrays().empty()) {
            out.failures.push_back("stage " + std::to_string(s + 2) +
                                   ": no parent model, remaining stages skipped");
            break;
        }
    }
    return out;
}

BranchingResult bgd_branching(const Network& net, const Dataset& data,
                              const BranchingConfig& cfg) {
    if (cfg.epochs < 1) throw UsageError("branching needs a main run of >= 1 epochs");
    for (std::size_t be : cfg.branch_epochs) {
        if (be >= cfg.epochs) {
            throw UsageError("branch epoch " + std::to_string(be) +
                             " is at or beyond the main run length " +
                             std::to_string(cfg.epochs));
        }
    }
    for (double c : cfg.multipliers) {
        if (c < 0.0) throw UsageError("noise multiplier must be >= 0");
    }

    Rng init_rng(derive_seed(cfg.seed, 0));
    WeightSnapshot w0 = net.init(init_rng);

    // lr / previous full-set loss per epoch, for bitwise resume
    std::vector<double> lr_at(cfg.epochs + 1, cfg.lr);
    std::vector<double> prev_at(cfg.epochs + 1, -1.0);
    EpochHook record = [&](const EpochState& st) {
        lr_at[st.epoch] = st.lr;
        prev_at[st.epoch] = st.prev_full_loss;
    };

    TrainOptions main_opt;
    main_opt.mode = TrainMode::bgd;
    main_opt.loss = cfg.loss;
    main_opt.epochs = cfg.epochs;
    main_opt.lr = cfg.lr;
    main_opt.lr_halving = cfg.lr_halving;
    main_opt.eval_every = cfg.eval_every;
    main_opt.snapshot_every = 1;
    main_opt.seed = derive_seed(cfg.seed, 1);

    BranchingResult out;
    out.main.id = "main";
    out.main.seed = main_opt.seed;
    out.main.result = train(net, std::move(w0), data, main_opt, record);
    if (out.main.result.diverged) {
        throw std::runtime_error("main trajectory diverged; branching aborted");
    }

    // snapshots hold every epoch 0..epochs in order
    const auto& msnaps = out.main.result.snapshots;

    for (std::size_t be : cfg.branch_epochs) {
        for (std::size_t mi = 0; mi < cfg.multipliers.size(); ++mi) {
            const double c = cfg.multipliers[mi];
            BranchRecord rec;
            rec.branch_epoch = be;
            rec.multiplier = c;
            rec.branch.id = "branch.e" + std::to_string(be) + ".c" + format_g(c);
            rec.branch.from_perturbation = true;
            rec.branch.seed = derive_seed(cfg.seed, 3000 + be);

            WeightSnapshot start =
                perturb(msnaps[be].weights, c, cfg.mode,
                        derive_seed(derive_seed(cfg.seed, 2000 + be), mi + 1));

            TrainOptions bopt = main_opt;
            bopt.seed = rec.branch.seed;
            bopt.start_epoch = be;
            bopt.resume_lr = lr_at[be];
            bopt.resume_prev_loss = prev_at[be];

            rec.branch.result = train(net, std::move(start), data, bopt);

            for (const SnapshotPoint& bp : rec.branch.result.snapshots) {
                WeightSnapshot mid =
                    interpolate_weights(msnaps[bp.epoch].weights, bp.weights, 0.5);
                mid = net.reestimate_norm_stats(mid, data.train_x);
                const auto ev = net.evaluate(mid, data.train_x, data.train_y, cfg.loss);
                rec.midpoints.push_back({bp.epoch, ev.error_pct, ev.loss});
            }
            out.branches.push_back(std::move(rec));
        }
    }
    return out;
}

SimilarityMatrices similarity_matrices(const Network& net,
                                       const std::vector<const WeightSnapshot*>& models,
                                       const Tensor& x, const std::vector<int>& y,
                                       std::vector<std::string> labels) {
    if (models.size() < 2) throw UsageError("similarity needs at least two models");
    const std::size_t n_samples = x.dim(0);
    if (n_samples == 0 || y.size() != n_samples) {
        throw UsageError("similarity needs a nonempty dataset with matching labels");
    }
    if (!labels.empty() && labels.size() != models.size()) {
        throw UsageError("label list does not match the model list");
    }

    const std::size_t m = models.size();
    std::vector<std::vector<char>> correct(m, std::vector<char>(n_samples, 0));

    const std::size_t chunk = 512;
    const std::size_t d = x.dim(1) * x.dim(2) * x.dim(3);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t pos = 0; pos < n_samples; pos += chunk) {
            const std::size_t cnt = std::min(chunk, n_samples - pos);
            Tensor part({cnt, x.dim(1), x.dim(2), x.dim(3)});
            std::memcpy(part.data(), x.data() + pos * d, cnt * d * sizeof(double));
            const std::vector<int> pred = net.predict(*models[i], part);
            for (std::size_t s = 0; s < cnt; ++s) {
                correct[i][pos + s] = pred[s] == y[pos + s];
            }
        }
    }

    SimilarityMatrices sim;
    sim.n = m;
    sim.labels = std::move(labels);
    if (sim.labels.empty()) {
        for (std::size_t i = 0; i < m; ++i) {
            sim.labels.push_back("model" + std::to_string(i + 1));
        }
    }
    sim.p_cc.assign(m * m, 0.0);
    sim.p_ii.assign(m * m, 0.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t ci = 0, ii = 0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            ci += correct[i][s] != 0;
            ii += correct[i][s] == 0;
        }
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t both_c = 0, both_i = 0;
            for (std::size_t s = 0; s < n_samples; ++s) {
                both_c += correct[i][s] && correct[j][s];
                both_i += !correct[i][s] && !correct[j][s];
            }
            sim.p_cc[i * m + j] =
                ci > 0 ? static_cast<double>(both_c) / static_cast<double>(ci) : nan;
            sim.p_ii[i * m + j] =
                ii > 0 ? static_cast<double>(both_i) / static_cast<double>(ii) : nan;
        }
    }
    return sim;
}

FlatnessResult flatness_probe(const Network& net, const WeightSnapshot& model,
                              const Dataset& data, const FlatnessConfig& cfg) {
    if (cfg.repeats < 1) throw UsageError("flatness probe needs repeats >= 1");
    if (cfg.noise < 0.0) throw UsageError("noise multiplier must be >= 0");

    FlatnessResult out;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        TrajectoryRun run;
        run.id = "repeat" + std::to_string(r + 1);
        run.seed = derive_seed(cfg.seed, 200 + r);
        run.from_perturbation = true;

        WeightSnapshot start =
            perturb(model, cfg.noise, cfg.mode, derive_seed(cfg.seed, 100 + r));

        TrainOptions opt;
        opt.mode = TrainMode::bgd;
        opt.loss = cfg.loss;
        opt.epochs = cfg.retrain_epochs;
        opt.lr = cfg.lr;
        opt.lr_halving = cfg.lr_halving;
        opt.eval_every = cfg.eval_every;
        opt.snapshot_every = cfg.snapshot_every;
        opt.seed = run.seed;

        run.result = train(net, std::move(start), data, opt);
        out.repeats.push_back(std::move(run));
    }

    Rng ref_rng(derive_seed(cfg.seed, 999));
    out.reference = net.init(ref_rng);

    std::vector<const WeightSnapshot*> models;
    std::vector<std::string> labels;
    for (const auto& r : out.repeats) {
        models.push_back(&r.result.weights);
        labels.push_back(r.id);
    }
    models.push_back(&out.reference);
    labels.push_back("reference");

    const bool use_test = data.test_size() > 0;
    out.similarity = similarity_matrices(net, models, use_test ? data.test_x : data.train_x,
                                         use_test ? data.test_y : data.train_y,
                                         std::move(labels));
    return out;
}

std::vector<InterpolationPoint> interpolate_models(const Network& net,
                                                   const WeightSnapshot& a,
                                                   const WeightSnapshot& b,
                                                   const Dataset& data,
                                                   const std::vector<double>& ratios,
                                                   LossKind loss) {
    if (ratios.empty()) throw UsageError("interpolation needs at least one ratio");
    net.validate_snapshot(a);
    net.validate_snapshot(b);

    std::vector<InterpolationPoint> out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double r : ratios) {
        WeightSnapshot w = interpolate_weights(a, b, r);
        w = net.reestimate_norm_stats(w, data.train_x);
        InterpolationPoint pt;
        pt.ratio = r;
        const auto tr = net.evaluate(w, data.train_x, data.train_y, loss);
        pt.train_error_pct = tr.error_pct;
        pt.train_loss = tr.loss;
        if (data.test_size() > 0) {
            const auto te = net.evaluate(w, data.test_x, data.test_y, loss);
            pt.test_error_pct = te.error_pct;
            pt.test_loss = te.loss;
        } else {
            pt.test_error_pct = nan;
            pt.test_loss = nan;
        }
        out.push_back(pt);
    }
    return out;
}

std::vector<PerturbationPoint> perturbation_sweep(const Network& net,
                                                  const WeightSnapshot& model,
                                                  const Dataset& data,
                                                  const std::vector<double>& multipliers,
                                                  std::size_t n_seeds, PerturbMode mode,
                                                  LossKind loss, std::uint64_t seed) {
    if (multipliers.empty()) throw UsageError("perturbation sweep needs multipliers");
    if (n_seeds < 1) throw UsageError("perturbation sweep needs >= 1 seeds");

    std::vector<PerturbationPoint> out;
    for (double c : multipliers) {
        PerturbationPoint pt;
        pt.multiplier = c;
        double err_sum = 0.0, loss_sum = 0.0;
        for (std::size_t k = 0; k < n_seeds; ++k) {
            // per-seed noise direction shared across multipliers: each seed
            // traces one ray, so the sweep compares like with like
            const WeightSnapshot pw = perturb(model, c, mode, derive_seed(seed, k + 1));
            const auto ev = net.evaluate(pw, data.train_x, data.train_y, loss);
            pt.per_seed_error_pct.push_back(ev.error_pct);
            pt.per_seed_loss.push_back(ev.loss);
            err_sum += ev.error_pct;
            loss_sum += ev.loss;
        }
        pt.mean_error_pct = err_sum / static_cast<double>(n_seeds);
        pt.mean_loss = loss_sum / static_cast<double>(n_seeds);
        out.push_back(std::move(pt));
    }
    return out;
}

std::vector<VolumePoint> sublevel_volume_probe(const Network& net,
                                               const WeightSnapshot& model,
                                               const Dataset& data,
                                               const std::vector<double>& radii,
                                               double loss_threshold,
                                               std::size_t samples_per_radius,
                                               LossKind loss, std::uint64_t seed) {
    if (radii.empty()) throw UsageError("volume probe needs radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] <= 0.0) throw UsageError("radii must be positive");
        if (i > 0 && radii[i] <= radii[i - 1]) {
            throw UsageError("radii must be strictly ascending");
        }
    }
    if (samples_per_radius < 200) {
        throw UsageError("volume probe needs >= 200 samples per radius");
    }
    if (!std::isfinite(loss_threshold)) throw UsageError("loss threshold must be finite");

    std::vector<VolumePoint> out;
    for (double r : radii) {
        std::size_t accepted = 0;
        for (std::size_t k = 0; k < samples_per_radius; ++k) {
            // shared per-sample direction across radii (one ray per k)
            const WeightSnapshot pw =
                perturb(model, r, PerturbMode::layer_std, derive_seed(seed, k + 1));
            const double l =
                net.loss_only(pw, data.train_x, data.train_y, loss, false);
            if (l < loss_threshold) ++accepted;
        }
        out.push_back(
            {r, static_cast<double>(accepted) / static_cast<double>(samples_per_radius)});
    }
    return out;
}

std::vector<SweepRow> generalization_sweep(const Dataset& data, const SweepConfig& cfg) {
    if (cfg.width_multipliers.size() < 2) {
        throw UsageError("sweep needs at least two width settings");
    }
    if (cfg.base_widths.empty()) throw UsageError("sweep needs base widths");
    if (cfg.train_sizes.empty()) throw UsageError("sweep needs train sizes");
    for (std::size_t n : cfg.train_sizes) {
        if (n == 0) throw UsageError("train size 0 is not allowed");
    }
    for (double m : cfg.width_multipliers) {
        if (m <= 0.0) throw UsageError("width multipliers must be positive");
    }

    std::vector<SweepRow> rows;
    std::size_t case_index = 0;
    for (std::size_t size : cfg.train_sizes) {
        for (double mult : cfg.width_multipliers) {
            ++case_index;
            Dataset subset =
                balanced_subset(data, size, 0, derive_seed(cfg.seed, 10 + case_index));
            if (cfg.random_labels) {
                randomize_labels(subset, derive_seed(cfg.seed, 600 + case_index));
            }

            std::vector<std::size_t> widths;
            for (std::size_t wdt : cfg.base_widths) {
                const double scaled = std::round(static_cast<double>(wdt) * mult);
                widths.push_back(static_cast<std::size_t>(std::max(scaled, 1.0)));
            }
            const auto shape = subset.sample_shape();
            Network net(make_convnet({shape[0], shape[1], shape[2]}, widths,
                                     subset.classes, cfg.batchnorm, Activation::relu));

            Rng init_rng(derive_seed(cfg.seed, 70 + case_index));
            TrainOptions opt = cfg.train;
            opt.seed = derive_seed(cfg.seed, 80 + case_index);
            if (opt.eval_every == 0) opt.eval_every = opt.epochs;

            TrainResult res = train(net, net.init(init_rng), subset, opt);

            SweepRow row;
            row.width_multiplier = mult;
            row.train_size = size;
            row.random_labels = cfg.random_labels;
            row.parameters = net.count_parameters();
            row.diverged = res.diverged;
            const EpochRecord& last = res.history.back();
            row.train_error_pct = last.train_error_pct;
            row.train_loss = last.train_loss;
            row.test_error_pct = last.test_error_pct;
            row.test_loss = last.test_loss;
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<PolyActivation> calibrate_poly_activations(const Network& relu_net,
                                                       const WeightSnapshot& w,
                                                       const Tensor& calib_x, int degree) {
    const std::vector<Tensor> pres = relu_net.collect_preactivations(w, calib_x);
    std::vector<PolyActivation> fits;
    fits.reserve(pres.size());
    for (const Tensor& t : pres) {
        const double sd = stddev_of(t.values());
        fits.push_back(fit_relu_minimax(degree, sd > 0.0 ? 3.0 * sd : 1.0));
    }
    return fits;
}

} // namespace risklab
