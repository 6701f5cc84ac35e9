#include "risklab/runner.hpp"

#include "risklab/errors.hpp"
#include "risklab/results.hpp"
#include "risklab/rng.hpp"
#include "risklab/snapshot_io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace risklab {

namespace {

const std::vector<std::string> kTrajectoryColumns = {
    "protocol", "run", "stage", "epoch", "split", "error_pct", "loss"};

void emit_history(CsvWriter& csv, const std::string& protocol, const std::string& run,
                  std::size_t stage, const std::vector<EpochRecord>& history) {
    for (const EpochRecord& r : history) {
        csv.row({protocol, run, CsvWriter::num(stage), CsvWriter::num(r.epoch), "train",
                 CsvWriter::num(r.train_error_pct), CsvWriter::num(r.train_loss)});
        csv.row({protocol, run, CsvWriter::num(stage), CsvWriter::num(r.epoch), "test",
                 CsvWriter::num(r.test_error_pct), CsvWriter::num(r.test_loss)});
    }
}

std::string epoch_name(const std::string& prefix, std::size_t epoch) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s.epoch%05zu.snap", prefix.c_str(), epoch);
    return buf;
}

void save_with_meta(const WeightSnapshot& w, const std::string& protocol,
                    const std::string& run, std::size_t epoch, const std::string& path) {
    WeightSnapshot copy = w;
    copy.metadata["protocol"] = protocol;
    copy.metadata["run"] = run;
    copy.metadata["epoch"] = std::to_string(epoch);
    save_snapshot(copy, path);
}

// persists a finished run as snapshots/<run>.final.snap plus, when a schedule
// was active, snapshots/<run>.epochNNNNN.snap for every retained epoch
void persist_snapshots(const OutDir& out, const std::string& protocol,
                       const TrajectoryRun& run) {
    const std::string dir = out.file("snapshots");
    fs::create_directories(dir);
    const std::size_t final_epoch =
        run.result.history.empty() ? 0 : run.result.history.back().epoch;
    save_with_meta(run.result.weights, protocol, run.id, final_epoch,
                   (fs::path(dir) / (run.id + ".final.snap")).string());
    for (const SnapshotPoint& sp : run.result.snapshots) {
        save_with_meta(sp.weights, protocol, run.id, sp.epoch,
                       (fs::path(dir) / epoch_name(run.id, sp.epoch)).string());
    }
}

Tensor calibration_batch(const Tensor& x, std::size_t cap) {
    const std::size_t n = std::min(cap, x.dim(0));
    const std::size_t d = x.dim(1) * x.dim(2) * x.dim(3);
    Tensor out({n, x.dim(1), x.dim(2), x.dim(3)});
    std::memcpy(out.data(), x.data(), n * d * sizeof(double));
    return out;
}

struct Prepared {
    Dataset data;
    Network net;
    WeightSnapshot w0;
};

Prepared prepare(const ExperimentConfig& cfg) {
    Dataset data = build_dataset(cfg.dataset, cfg.seed);
    NetworkSpec spec = build_network_spec(cfg.network, data);
    Network net(std::move(spec));
    Rng init_rng(derive_seed(cfg.seed, 0));
    WeightSnapshot w0 = net.init(init_rng);

    if (cfg.network.activation == Activation::poly && cfg.network.poly_coeffs.empty()) {
        // fit the per-layer activations on a small calibration batch drawn
        // from the ReLU twin's pre-activations
        const Tensor calib = calibration_batch(data.train_x, 256);
        NetworkSpec pspec = net.spec();
        pspec.activation = Activation::poly;
        pspec.poly_per_layer =
            calibrate_poly_activations(net, w0, calib, cfg.network.poly_degree);
        net = Network(std::move(pspec));
    }
    return Prepared{std::move(data), std::move(net), std::move(w0)};
}

void run_train(const ExperimentConfig& cfg, const OutDir& out, Prepared& p) {
    TrainOptions opt = cfg.optimizer;
    opt.seed = derive_seed(cfg.seed, 1);

    TrajectoryRun run;
    run.id = "main";
    run.seed = opt.seed;
    run.result = train(p.net, std::move(p.w0), p.data, opt);

    CsvWriter csv(out.file("trajectory.csv"), kTrajectoryColumns);
    emit_history(csv, cfg.protocol, run.id, 0, run.result.history);
    persist_snapshots(out, cfg.protocol, run);

    if (!cfg.params.perturb_multipliers.empty()) {
        const auto sweep = perturbation_sweep(
            p.net, run.result.weights, p.data, cfg.params.perturb_multipliers,
            cfg.params.perturb_seeds, PerturbMode::layer_std, opt.loss,
            derive_seed(cfg.seed, 40));
        CsvWriter pcsv(out.file("perturb.csv"),
                       {"protocol", "run", "stage", "epoch", "split", "error_pct", "loss",
                        "multiplier", "seed_index"});
        const std::size_t last_epoch =
            run.result.history.empty() ? 0 : run.result.history.back().epoch;
        for (const auto& pt : sweep) {
            for (std::size_t k = 0; k < pt.per_seed_error_pct.size(); ++k) {
                pcsv.row({cfg.protocol, "perturb", "0", CsvWriter::num(last_epoch), "train",
                          CsvWriter::num(pt.per_seed_error_pct[k]),
                          CsvWriter::num(pt.per_seed_loss[k]),
                          CsvWriter::num(pt.multiplier), CsvWriter::num(k)});
            }
        }
    }
    if (!cfg.params.volume_radii.empty()) {
        const auto vol = sublevel_volume_probe(
            p.net, run.result.weights, p.data, cfg.params.volume_radii,
            cfg.params.volume_threshold, cfg.params.volume_samples, opt.loss,
            derive_seed(cfg.seed, 41));
        CsvWriter vcsv(out.file("volume.csv"),
                       {"protocol", "radius", "acceptance", "samples", "threshold"});
        for (const auto& v : vol) {
            vcsv.row({cfg.protocol, CsvWriter::num(v.radius), CsvWriter::num(v.acceptance),
                      CsvWriter::num(cfg.params.volume_samples),
                      CsvWriter::num(cfg.params.volume_threshold)});
        }
    }
    if (run.result.diverged) {
        throw std::runtime_error("training diverged (non-finite loss); partial results written");
    }
}

void run_stage_sgd(const ExperimentConfig& cfg, const OutDir& out, Prepared& p) {
    StagedSgdConfig scfg = cfg.params.staged;
    scfg.batch_size = cfg.optimizer.batch_size;
    scfg.lr = cfg.optimizer.lr;
    scfg.loss = cfg.optimizer.loss;
    scfg.snapshot_every =
        cfg.optimizer.snapshot_every > 0 ? cfg.optimizer.snapshot_every : 1;
    scfg.seed = cfg.seed;

    const StagedSgdResult res = staged_parallel_sgd(p.net, p.data, scfg);

    CsvWriter csv(out.file("trajectory.csv"), kTrajectoryColumns);
    for (std::size_t i = 0; i < res.trajectories.size(); ++i) {
        const std::size_t stage = i / scfg.trajectories_per_stage + 1;
        emit_history(csv, cfg.protocol, res.trajectories[i].id, stage,
                     res.trajectories[i].result.history);
    }
    for (const auto& run : res.trajectories) {
        persist_snapshots(out, cfg.protocol, run);
    }

    std::ofstream fail(out.file("failures.txt"), std::ios::binary | std::ios::trunc);
    for (const auto& f : res.failures) fail << f << '\n';
}

void run_branch_bgd(const ExperimentConfig& cfg, const OutDir& out, Prepared& p) {
    BranchingConfig bcfg = cfg.params.branching;
    bcfg.epochs = cfg.optimizer.epochs;
    bcfg.lr = cfg.optimizer.lr;
    bcfg.lr_halving = cfg.optimizer.lr_halving;
    bcfg.loss = cfg.optimizer.loss;
    bcfg.eval_every = cfg.optimizer.eval_every;
    bcfg.seed = cfg.seed;

    const BranchingResult res = bgd_branching(p.net, p.data, bcfg);

    CsvWriter csv(out.file("trajectory.csv"), kTrajectoryColumns);
    emit_history(csv, cfg.protocol, res.main.id, 0, res.main.result.history);
    for (const auto& b : res.branches) {
        emit_history(csv, cfg.protocol, b.branch.id, 0, b.branch.result.history);
    }

    CsvWriter mid(out.file("midpoints.csv"),
                  {"protocol", "run", "stage", "epoch", "split", "error_pct", "loss",
                   "branch_epoch", "multiplier"});
    for (const auto& b : res.branches) {
        for (const InterpPoint& ip : b.midpoints) {
            mid.row({cfg.protocol, b.branch.id, "0", CsvWriter::num(ip.epoch), "train",
                     CsvWriter::num(ip.error_pct), CsvWriter::num(ip.loss),
                     CsvWriter::num(b.branch_epoch), CsvWriter::num(b.multiplier)});
        }
    }

    persist_snapshots(out, cfg.protocol, res.main);
    for (const auto& b : res.branches) {
        persist_snapshots(out, cfg.protocol, b.branch);
    }
}

void run_flatness(const ExperimentConfig& cfg, const OutDir& out, Prepared& p) {
    CsvWriter csv(out.file("trajectory.csv"), kTrajectoryColumns);

    WeightSnapshot model;
    if (!cfg.params.model_snapshot.empty()) {
        model = load_snapshot(cfg.params.model_snapshot);
        p.net.validate_snapshot(model);
    } else {
        TrainOptions opt = cfg.optimizer;
        opt.seed = derive_seed(cfg.seed, 1);
        TrainResult pre = train(p.net, std::move(p.w0), p.data, opt);
        if (pre.diverged) {
            throw std::runtime_error("flatness pre-training diverged");
        }
        emit_history(csv, cfg.protocol, "pretrain", 0, pre.history);
        model = std::move(pre.weights);
    }

    FlatnessConfig fcfg = cfg.params.flatness;
    fcfg.lr = cfg.optimizer.lr;
    fcfg.lr_halving = cfg.optimizer.lr_halving;
    fcfg.loss = cfg.optimizer.loss;
    fcfg.eval_every = cfg.optimizer.eval_every;
    fcfg.snapshot_every = cfg.optimizer.snapshot_every;
    fcfg.seed = cfg.seed;

    const FlatnessResult res = flatness_probe(p.net, model, p.data, fcfg);

    for (const auto& r : res.repeats) {
        emit_history(csv, cfg.protocol, r.id, 0, r.result.history);
    }

    CsvWriter sim(out.file("similarity.csv"),
                  {"protocol", "row_model", "col_model", "p_cc", "p_ii"});
    for (std::size_t i = 0; i < res.similarity.n; ++i) {
        for (std::size_t j = 0; j < res.similarity.n; ++j) {
            sim.row({cfg.protocol, res.similarity.labels[i], res.similarity.labels[j],
                     CsvWriter::num(res.similarity.cc(i, j)),
                     CsvWriter::num(res.similarity.ii(i, j))});
        }
    }

    const std::string dir = out.file("snapshots");
    fs::create_directories(dir);
    save_with_meta(model, cfg.protocol, "base", 0, (fs::path(dir) / "base.snap").string());
    save_with_meta(res.reference, cfg.protocol, "reference", 0,
                   (fs::path(dir) / "reference.snap").string());
    for (const auto& r : res.repeats) {
        persist_snapshots(out, cfg.protocol, r);
    }
}

void run_interpolate(const ExperimentConfig& cfg, const OutDir& out, Prepared& p) {
    const WeightSnapshot a = load_snapshot(cfg.params.snapshot_a);
    const WeightSnapshot b = load_snapshot(cfg.params.snapshot_b);

    const auto pts = interpolate_models(p.net, a, b, p.data, cfg.params.ratios,
                                        cfg.optimizer.loss);

    CsvWriter csv(out.file("interpolation.csv"),
                  {"protocol", "run", "stage", "epoch", "split", "error_pct", "loss",
                   "ratio"});
    for (const auto& pt : pts) {
        csv.row({cfg.protocol, "interp", "0", "0", "train",
                 CsvWriter::num(pt.train_error_pct), CsvWriter::num(pt.train_loss),
                 CsvWriter::num(pt.ratio)});
        csv.row({cfg.protocol, "interp", "0", "0", "test",
                 CsvWriter::num(pt.test_error_pct), CsvWriter::num(pt.test_loss),
                 CsvWriter::num(pt.ratio)});
    }
}

void run_sweep(const ExperimentConfig& cfg, const OutDir& out, Prepared& p) {
    SweepConfig scfg = cfg.params.sweep;
    scfg.train = cfg.optimizer;
    scfg.batchnorm = cfg.network.batchnorm;
    scfg.seed = cfg.seed;

    const auto rows = generalization_sweep(p.data, scfg);

    CsvWriter csv(out.file("sweep.csv"),
                  {"protocol", "run", "stage", "epoch", "split", "error_pct", "loss",
                   "width_multiplier", "train_size", "parameters", "random_labels",
                   "diverged"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepRow& r = rows[i];
        const std::string run = "case" + std::to_string(i + 1);
        const std::string epoch = CsvWriter::num(cfg.optimizer.epochs);
        csv.row({cfg.protocol, run, "0", epoch, "train", CsvWriter::num(r.train_error_pct),
                 CsvWriter::num(r.train_loss), CsvWriter::num(r.width_multiplier),
                 CsvWriter::num(r.train_size), CsvWriter::num(r.parameters),
                 r.random_labels ? "1" : "0", r.diverged ? "1" : "0"});
        csv.row({cfg.protocol, run, "0", epoch, "test", CsvWriter::num(r.test_error_pct),
                 CsvWriter::num(r.test_loss), CsvWriter::num(r.width_multiplier),
                 CsvWriter::num(r.train_size), CsvWriter::num(r.parameters),
                 r.random_labels ? "1" : "0", r.diverged ? "1" : "0"});
    }
}

} // namespace

void run_protocol(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (!cfg.seed_set) {
        throw UsageError("a master seed is required (config \"seed\" or --seed)");
    }
    OutDir out(out_dir);

    {
        std::ofstream echo(out.file("config.json"), std::ios::binary | std::ios::trunc);
        if (!echo) throw UsageError("cannot write config echo in " + out_dir);
        echo << cfg.canonical;
    }

    Prepared p = prepare(cfg);

    if (cfg.protocol == "train") {
        run_train(cfg, out, p);
    } else if (cfg.protocol == "stage-sgd") {
        run_stage_sgd(cfg, out, p);
    } else if (cfg.protocol == "branch-bgd") {
        run_branch_bgd(cfg, out, p);
    } else if (cfg.protocol == "flatness") {
        run_flatness(cfg, out, p);
    } else if (cfg.protocol == "interpolate") {
        run_interpolate(cfg, out, p);
    } else if (cfg.protocol == "sweep") {
        run_sweep(cfg, out, p);
    } else {
        throw UsageError("unknown protocol: " + cfg.protocol);
    }

    write_manifest(out.path(), config_hash(cfg));
}

} // namespace risklab
