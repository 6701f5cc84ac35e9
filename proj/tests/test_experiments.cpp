#include "doctest.h"

#include "risklab/dataset.hpp"
#include "risklab/errors.hpp"
#include "risklab/experiments.hpp"
#include "risklab/net.hpp"
#include "risklab/rng.hpp"

#include <cmath>
#include <cstring>
#include <set>
#include <string>
#include <vector>

using namespace risklab;

namespace {

Dataset tiny_data(std::size_t n_train = 40, std::size_t n_test = 20) {
    SyntheticSpec spec;
    spec.classes = 4;
    spec.dims = {1, 6, 6};
    spec.n_train = n_train;
    spec.n_test = n_test;
    spec.separation = 2.0;
    spec.noise = 0.5;
    return make_synthetic(spec, 99);
}

Network tiny_net(const Dataset& data, std::vector<std::size_t> widths = {3}) {
    const auto s = data.sample_shape();
    return Network(make_convnet({s[0], s[1], s[2]}, widths, data.classes));
}

bool same_bits(const WeightSnapshot& a, const WeightSnapshot& b) {
    if (a.arrays().size() != b.arrays().size()) return false;
    for (std::size_t i = 0; i < a.arrays().size(); ++i) {
        const auto& pa = a.arrays()[i];
        const auto& pb = b.arrays()[i];
        if (pa.name != pb.name || pa.value.size() != pb.value.size()) return false;
        if (std::memcmp(pa.value.data(), pb.value.data(),
                        pa.value.size() * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("staged SGD: ids, seeds and parent chaining") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);

    StagedSgdConfig cfg;
    cfg.stages = 2;
    cfg.trajectories_per_stage = 3;
    cfg.epochs_per_stage = 2;
    cfg.batch_size = 10;
    cfg.lr = 0.02;
    cfg.restart_noise = 0.05;
    cfg.seed = 31;

    const StagedSgdResult res = staged_parallel_sgd(net, data, cfg);
    REQUIRE(res.trajectories.size() == 6);
    CHECK(res.failures.empty());
    CHECK(res.trajectories[0].id == "stage01.traj01");
    CHECK(res.trajectories[3].id == "stage02.traj01");
    CHECK(res.trajectories[5].id == "stage02.traj03");

    std::set<std::uint64_t> seeds;
    for (const auto& t : res.trajectories) seeds.insert(t.seed);
    CHECK(seeds.size() == 6);

    // first two start directly from the stage parent, the third perturbed
    CHECK(!res.trajectories[0].from_perturbation);
    CHECK(!res.trajectories[1].from_perturbation);
    CHECK(res.trajectories[2].from_perturbation);

    // every trajectory keeps its starting point as the epoch-0 snapshot
    const auto& s1t1 = res.trajectories[0];
    const auto& s1t2 = res.trajectories[1];
    const auto& s1t3 = res.trajectories[2];
    REQUIRE(!s1t1.result.snapshots.empty());
    CHECK(same_bits(s1t1.result.snapshots[0].weights, s1t2.result.snapshots[0].weights));
    CHECK(!same_bits(s1t1.result.snapshots[0].weights, s1t3.result.snapshots[0].weights));

    // stage 2 chains from stage 1's first trajectory
    const auto& s2t1 = res.trajectories[3];
    CHECK(same_bits(s2t1.result.snapshots[0].weights, s1t1.result.weights));

    const StagedSgdResult re = staged_parallel_sgd(net, data, cfg);
    CHECK(same_bits(re.trajectories.back().result.weights,
                    res.trajectories.back().result.weights));
}

TEST_CASE("staged SGD validation") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);
    StagedSgdConfig cfg;
    cfg.stages = 0;
    CHECK_THROWS_AS(staged_parallel_sgd(net, data, cfg), UsageError);
    cfg.stages = 1;
    cfg.restart_noise = -0.1;
    CHECK_THROWS_AS(staged_parallel_sgd(net, data, cfg), UsageError);
}

TEST_CASE("branching: zero noise reproduces the main run exactly") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);

    BranchingConfig cfg;
    cfg.branch_epochs = {0, 2};
    cfg.multipliers = {0.0, 0.5};
    cfg.epochs = 4;
    cfg.lr = 0.05;
    cfg.seed = 17;

    const BranchingResult res = bgd_branching(net, data, cfg);
    CHECK(res.main.id == "main");
    CHECK(res.main.result.history.size() == 5);
    REQUIRE(res.main.result.snapshots.size() == 5); // epochs 0..4
    REQUIRE(res.branches.size() == 4);

    CHECK(res.branches[0].branch.id == "branch.e0.c0");
    CHECK(res.branches[1].branch.id == "branch.e0.c0.5");
    CHECK(res.branches[2].branch.id == "branch.e2.c0");
    CHECK(res.branches[3].branch.id == "branch.e2.c0.5");

    for (const auto& b : res.branches) {
        CHECK(b.parent_id == "main");
        CHECK(b.branch.from_perturbation);
        // one midpoint per epoch from the branch point to the horizon
        CHECK(b.midpoints.size() == cfg.epochs - b.branch_epoch + 1);
        CHECK(b.midpoints.front().epoch == b.branch_epoch);
        CHECK(b.midpoints.back().epoch == cfg.epochs);
    }

    // a zero-noise branch replays the main trajectory bit for bit
    const BranchRecord& replay = res.branches[2];
    CHECK(same_bits(replay.branch.result.weights, res.main.result.weights));

    // so its midpoints are just the main model re-evaluated through the
    // averaging pipeline
    for (const InterpPoint& mp : replay.midpoints) {
        const WeightSnapshot& me = res.main.result.snapshots[mp.epoch].weights;
        WeightSnapshot mid = interpolate_weights(me, me, 0.5);
        mid = net.reestimate_norm_stats(mid, data.train_x);
        const auto ev = net.evaluate(mid, data.train_x, data.train_y, cfg.loss);
        CHECK(mp.error_pct == ev.error_pct);
        CHECK(mp.loss == ev.loss);
    }

    // nonzero noise actually moves the branch
    CHECK(!same_bits(res.branches[3].branch.result.snapshots[0].weights,
                     res.main.result.snapshots[2].weights));
}

TEST_CASE("branching validation") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);
    BranchingConfig cfg;
    cfg.epochs = 4;
    cfg.branch_epochs = {4};
    CHECK_THROWS_AS(bgd_branching(net, data, cfg), UsageError);
    cfg.branch_epochs = {0};
    cfg.multipliers = {-1.0};
    CHECK_THROWS_AS(bgd_branching(net, data, cfg), UsageError);
}

TEST_CASE("similarity matrices match a direct recount") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);
    Rng r1(5), r2(6);
    const WeightSnapshot w1 = net.init(r1);
    const WeightSnapshot w2 = net.init(r2);

    // force model 1 to be always right by adopting its predictions as truth
    const std::vector<int> y = net.predict(w1, data.train_x);
    const std::vector<std::vector<int>> preds = {y, net.predict(w2, data.train_x)};

    const SimilarityMatrices sim =
        similarity_matrices(net, {&w1, &w2}, data.train_x, y, {"a", "b"});
    REQUIRE(sim.n == 2);
    CHECK(sim.labels[0] == "a");
    CHECK(sim.labels[1] == "b");

    const std::size_t n = y.size();
    for (std::size_t i = 0; i < 2; ++i) {
        std::size_t ci = 0, ii = 0;
        for (std::size_t s = 0; s < n; ++s) {
            (preds[i][s] == y[s] ? ci : ii) += 1;
        }
        for (std::size_t j = 0; j < 2; ++j) {
            std::size_t bc = 0, bi = 0;
            for (std::size_t s = 0; s < n; ++s) {
                bc += preds[i][s] == y[s] && preds[j][s] == y[s];
                bi += preds[i][s] != y[s] && preds[j][s] != y[s];
            }
            if (ci > 0) {
                CHECK(sim.cc(i, j) == doctest::Approx(double(bc) / double(ci)));
            } else {
                CHECK(std::isnan(sim.cc(i, j)));
            }
            if (ii > 0) {
                CHECK(sim.ii(i, j) == doctest::Approx(double(bi) / double(ii)));
            } else {
                CHECK(std::isnan(sim.ii(i, j)));
            }
        }
    }
    CHECK(sim.cc(0, 0) == 1.0);
    CHECK(std::isnan(sim.ii(0, 0))); // model 1 is never wrong
    CHECK(std::isnan(sim.ii(0, 1)));

    CHECK_THROWS_AS(similarity_matrices(net, {&w1}, data.train_x, y), UsageError);
    CHECK_THROWS_AS(similarity_matrices(net, {&w1, &w2}, data.train_x, y, {"only"}),
                    UsageError);
    const std::vector<int> short_y(3, 0);
    CHECK_THROWS_AS(similarity_matrices(net, {&w1, &w2}, data.train_x, short_y),
                    UsageError);
}

TEST_CASE("flatness probe: zero noise collapses the repeats") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);
    Rng r(44);
    const WeightSnapshot model = net.init(r);

    FlatnessConfig cfg;
    cfg.noise = 0.0;
    cfg.repeats = 3;
    cfg.retrain_epochs = 2;
    cfg.lr = 0.05;
    cfg.seed = 12;

    const FlatnessResult res = flatness_probe(net, model, data, cfg);
    REQUIRE(res.repeats.size() == 3);
    CHECK(res.repeats[0].id == "repeat1");
    CHECK(res.repeats[2].id == "repeat3");
    // identical starts + full-batch updates: every repeat lands on the
    // same weights
    CHECK(same_bits(res.repeats[0].result.weights, res.repeats[1].result.weights));
    CHECK(same_bits(res.repeats[0].result.weights, res.repeats[2].result.weights));

    Rng ref_rng(derive_seed(cfg.seed, 999));
    CHECK(same_bits(res.reference, net.init(ref_rng)));

    REQUIRE(res.similarity.n == 4);
    CHECK(res.similarity.labels.back() == "reference");
    // identical repeats agree with themselves whenever they are ever correct
    const double c01 = res.similarity.cc(0, 1);
    CHECK((std::isnan(c01) || c01 == 1.0));

    FlatnessConfig bad = cfg;
    bad.repeats = 0;
    CHECK_THROWS_AS(flatness_probe(net, model, data, bad), UsageError);
    bad = cfg;
    bad.noise = -1.0;
    CHECK_THROWS_AS(flatness_probe(net, model, data, bad), UsageError);
}

TEST_CASE("interpolation endpoints go through the same pipeline") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);
    Rng r1(1), r2(2);
    const WeightSnapshot a = net.init(r1);
    const WeightSnapshot b = net.init(r2);

    const auto pts = interpolate_models(net, a, b, data, {0.0, 0.5, 1.0},
                                        LossKind::cross_entropy);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].ratio == 0.0);
    CHECK(pts[2].ratio == 1.0);

    WeightSnapshot ea = net.reestimate_norm_stats(a, data.train_x);
    const auto eva = net.evaluate(ea, data.train_x, data.train_y, LossKind::cross_entropy);
    CHECK(pts[0].train_error_pct == eva.error_pct);
    CHECK(pts[0].train_loss == eva.loss);

    WeightSnapshot eb = net.reestimate_norm_stats(b, data.train_x);
    const auto evb = net.evaluate(eb, data.test_x, data.test_y, LossKind::cross_entropy);
    CHECK(pts[2].test_error_pct == evb.error_pct);
    CHECK(pts[2].test_loss == evb.loss);

    Dataset no_test = data;
    no_test.test_x = Tensor({0, 1, 6, 6});
    no_test.test_y.clear();
    const auto pts2 = interpolate_models(net, a, b, no_test, {0.5},
                                         LossKind::cross_entropy);
    CHECK(std::isnan(pts2[0].test_error_pct));
    CHECK(std::isnan(pts2[0].test_loss));

    CHECK_THROWS_AS(interpolate_models(net, a, b, data, {}, LossKind::cross_entropy),
                    UsageError);
}

TEST_CASE("perturbation sweep: zero multiplier reproduces the model") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);
    Rng r(9);
    const WeightSnapshot model = net.init(r);

    const auto pts = perturbation_sweep(net, model, data, {0.0, 0.3}, 3,
                                        PerturbMode::layer_std,
                                        LossKind::cross_entropy, 8);
    REQUIRE(pts.size() == 2);
    REQUIRE(pts[0].per_seed_error_pct.size() == 3);
    REQUIRE(pts[1].per_seed_loss.size() == 3);

    const auto ev = net.evaluate(model, data.train_x, data.train_y,
                                 LossKind::cross_entropy);
    for (double e : pts[0].per_seed_error_pct) CHECK(e == ev.error_pct);
    for (double l : pts[0].per_seed_loss) CHECK(l == ev.loss);
    CHECK(pts[0].mean_error_pct == doctest::Approx(ev.error_pct));

    CHECK_THROWS_AS(perturbation_sweep(net, model, data, {}, 3,
                                       PerturbMode::layer_std,
                                       LossKind::cross_entropy, 8),
                    UsageError);
    CHECK_THROWS_AS(perturbation_sweep(net, model, data, {0.1}, 0,
                                       PerturbMode::layer_std,
                                       LossKind::cross_entropy, 8),
                    UsageError);
}

TEST_CASE("volume probe acceptance bounds and validation") {
    const Dataset data = tiny_data();
    const Network net = tiny_net(data);
    Rng r(9);
    const WeightSnapshot model = net.init(r);

    const auto always = sublevel_volume_probe(net, model, data, {0.01, 0.02}, 1e30,
                                              200, LossKind::cross_entropy, 3);
    REQUIRE(always.size() == 2);
    CHECK(always[0].radius == 0.01);
    CHECK(always[0].acceptance == 1.0);
    CHECK(always[1].acceptance == 1.0);

    const auto never = sublevel_volume_probe(net, model, data, {0.01}, -1.0, 200,
                                             LossKind::cross_entropy, 3);
    CHECK(never[0].acceptance == 0.0);

    CHECK_THROWS_AS(sublevel_volume_probe(net, model, data, {0.01}, 1.0, 199,
                                          LossKind::cross_entropy, 3),
                    UsageError);
    CHECK_THROWS_AS(sublevel_volume_probe(net, model, data, {0.02, 0.01}, 1.0, 200,
                                          LossKind::cross_entropy, 3),
                    UsageError);
    CHECK_THROWS_AS(sublevel_volume_probe(net, model, data, {-0.1}, 1.0, 200,
                                          LossKind::cross_entropy, 3),
                    UsageError);
    CHECK_THROWS_AS(sublevel_volume_probe(net, model, data, {}, 1.0, 200,
                                          LossKind::cross_entropy, 3),
                    UsageError);
}

TEST_CASE("generalization sweep scales parameter counts") {
    const Dataset data = tiny_data(80, 20);

    SweepConfig cfg;
    cfg.base_widths = {2, 3};
    cfg.width_multipliers = {1.0, 2.0};
    cfg.train_sizes = {40};
    cfg.train.mode = TrainMode::sgd;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 10;
    cfg.train.lr = 0.02;
    cfg.seed = 21;

    const auto rows = generalization_sweep(data, cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].width_multiplier == 1.0);
    CHECK(rows[1].width_multiplier == 2.0);
    CHECK(rows[0].train_size == 40);
    CHECK(rows[1].parameters > rows[0].parameters);
    CHECK(!rows[0].random_labels);
    for (const auto& row : rows) {
        CHECK(row.train_error_pct >= 0.0);
        CHECK(row.train_error_pct <= 100.0);
    }

    SweepConfig rl = cfg;
    rl.random_labels = true;
    const auto rl_rows = generalization_sweep(data, rl);
    CHECK(rl_rows[0].random_labels);

    SweepConfig bad = cfg;
    bad.train_sizes = {0};
    CHECK_THROWS_AS(generalization_sweep(data, bad), UsageError);
    bad = cfg;
    bad.width_multipliers = {1.0};
    CHECK_THROWS_AS(generalization_sweep(data, bad), UsageError);
}

TEST_CASE("poly calibration widens with the observed spread") {
    const Dataset data = tiny_data();
    const auto s = data.sample_shape();
    Network net(make_convnet({s[0], s[1], s[2]}, {3, 3}, data.classes));
    Rng r(6);
    const WeightSnapshot w = net.init(r);

    const auto fits = calibrate_poly_activations(net, w, data.train_x, 4);
    const auto pres = net.collect_preactivations(w, data.train_x);
    REQUIRE(fits.size() == pres.size());
    REQUIRE(fits.size() == 2);
    for (std::size_t i = 0; i < fits.size(); ++i) {
        CHECK(fits[i].degree() == 4);
        const double sd = stddev_of(pres[i].values());
        const double expect = sd > 0.0 ? 3.0 * sd : 1.0;
        CHECK(fits[i].halfwidth == doctest::Approx(expect).epsilon(1e-12));
    }

    // zeroed-out weights give zero spread and fall back to halfwidth 1
    WeightSnapshot wz = w;
    std::vector<double> flat = wz.flatten_trainable();
    std::fill(flat.begin(), flat.end(), 0.0);
    wz.assign_trainable(flat);
    const auto fz = calibrate_poly_activations(net, wz, data.train_x, 3);
    for (const auto& f : fz) CHECK(f.halfwidth == 1.0);
}
