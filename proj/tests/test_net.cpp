#include "doctest.h"

#include "risklab/errors.hpp"
#include "risklab/net.hpp"
#include "risklab/rng.hpp"

#include <cmath>

using namespace risklab;

namespace {

NetworkSpec dense_only_spec() {
    NetworkSpec spec;
    spec.input_shape = {2, 1, 1};
    spec.classes = 2;
    spec.layers.push_back({LayerDesc::Kind::dense, 2, 2, true, "L1"});
    return spec;
}

} // namespace

TEST_CASE("dense layer computes W x + b") {
    Network net(dense_only_spec());
    WeightSnapshot w;
    w.add({"L1.weight", Tensor::from_values({2, 2}, {1, 2, 3, 4}), true});
    w.add({"L1.bias", Tensor::from_values({2}, {0.5, -0.5}), true});

    const Tensor x = Tensor::from_values({1, 2, 1, 1}, {1.0, 2.0});
    const Tensor out = net.forward(w, x, false);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(5.5).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(10.5).epsilon(1e-15));
}

TEST_CASE("strided convolution with unit padding") {
    NetworkSpec spec;
    spec.input_shape = {1, 2, 2};
    spec.classes = 2;
    spec.layers.push_back({LayerDesc::Kind::conv3x3s2, 1, 1, false, "L1"});
    spec.layers.push_back({LayerDesc::Kind::dense, 1, 2, false, "L2"});
    Network net(spec);

    WeightSnapshot w;
    w.add({"L1.weight",
           Tensor::from_values({1, 1, 3, 3}, {10, 20, 30, 40, 50, 60, 70, 80, 90}),
           true});
    w.add({"L2.weight", Tensor::from_values({2, 1}, {1.0, 0.0}), true});

    const Tensor x = Tensor::from_values({1, 1, 2, 2}, {1, 2, 3, 4});
    const Tensor out = net.forward(w, x, false);
    // the 2x2 input only overlaps the lower-right kernel quadrant
    CHECK(out[0] == doctest::Approx(50.0 + 120.0 + 240.0 + 360.0).epsilon(1e-15));
    CHECK(out[1] == 0.0);
}

TEST_CASE("convnet geometry and parameter count") {
    const NetworkSpec spec = make_convnet({1, 8, 8}, {4}, 10);
    Network net(spec);
    // conv 1->4: 36 weights; dense 4*4*4 -> 10 with bias: 650
    CHECK(net.count_parameters() == 36 + 650);
    CHECK(net.layer_labels() == std::vector<std::string>{"L1", "L2"});
    CHECK(net.norm_labels() == std::vector<std::string>{"L1"});

    Rng rng(1);
    const WeightSnapshot w = net.init(rng);
    CHECK(w.count_parameters() == 686);
    const Tensor x = Tensor({2, 1, 8, 8}, 0.5);
    const Tensor out = net.forward(w, x, false);
    CHECK(out.dim(0) == 2);
    CHECK(out.dim(1) == 10);
}

TEST_CASE("batch normalization: train mode uses batch statistics") {
    NetworkSpec spec;
    spec.input_shape = {1, 1, 1};
    spec.classes = 2;
    spec.layers.push_back({LayerDesc::Kind::batchnorm, 1, 1, false, "L1"});
    spec.layers.push_back({LayerDesc::Kind::dense, 1, 2, false, "L2"});
    spec.bn_eps = 0.0;
    Network net(spec);

    WeightSnapshot w;
    w.add({"L1.bn.running_mean", Tensor({1}, 0.0), false});
    w.add({"L1.bn.running_var", Tensor({1}, 1.0), false});
    w.add({"L2.weight", Tensor::from_values({2, 1}, {1.0, 0.0}), true});

    // batch {2, 4}: mean 3, population variance 1
    const Tensor x = Tensor::from_values({2, 1, 1, 1}, {2.0, 4.0});
    const Tensor tr = net.forward(w, x, true);
    CHECK(tr.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(tr.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // eval mode normalizes with the running statistics (0, 1) instead
    const Tensor ev = net.forward(w, x, false);
    CHECK(ev.at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ev.at(1, 0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("re-estimated statistics make eval match a train-mode pass") {
    const NetworkSpec spec = make_convnet({1, 6, 6}, {3, 4}, 5);
    Network net(spec);
    Rng rng(7);
    WeightSnapshot w = net.init(rng);

    Tensor x({8, 1, 6, 6});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.gaussian();

    const WeightSnapshot w2 = net.reestimate_norm_stats(w, x);
    const Tensor train_out = net.forward(w, x, true);
    const Tensor eval_out = net.forward(w2, x, false);
    REQUIRE(train_out.size() == eval_out.size());
    for (std::size_t i = 0; i < train_out.size(); ++i) {
        CHECK(eval_out[i] == doctest::Approx(train_out[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("prediction breaks ties toward the lowest class") {
    Network net(dense_only_spec());
    WeightSnapshot w;
    w.add({"L1.weight", Tensor::from_values({2, 2}, {0, 0, 0, 0}), true});
    w.add({"L1.bias", Tensor::from_values({2}, {0.0, 0.0}), true});
    const Tensor x = Tensor::from_values({1, 2, 1, 1}, {1.0, 1.0});
    CHECK(net.predict(w, x) == std::vector<int>{0});
}

TEST_CASE("evaluate is exact under chunking") {
    const NetworkSpec spec = make_convnet({1, 6, 6}, {3}, 4);
    Network net(spec);
    Rng rng(9);
    const WeightSnapshot w = net.init(rng);
    Tensor x({7, 1, 6, 6});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.gaussian();
    std::vector<int> y = {0, 1, 2, 3, 0, 1, 2};

    const auto a = net.evaluate(w, x, y, LossKind::cross_entropy, 2);
    const auto b = net.evaluate(w, x, y, LossKind::cross_entropy, 512);
    CHECK(a.loss == b.loss);
    CHECK(a.error_pct == b.error_pct);
}

TEST_CASE("loss values at fixed logits") {
    Network net(dense_only_spec());
    WeightSnapshot w;
    w.add({"L1.weight", Tensor::from_values({2, 2}, {1, 0, 0, 1}), true});
    w.add({"L1.bias", Tensor::from_values({2}, {0.0, 0.0}), true});

    // logits (3, 1), label 0: CE = log(1 + e^-2)
    const Tensor x = Tensor::from_values({1, 2, 1, 1}, {3.0, 1.0});
    const double ce = net.loss_only(w, x, {0}, LossKind::cross_entropy, false);
    CHECK(ce == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));

    // square loss sums over classes: (3-1)^2 + (1-0)^2
    const double sq = net.loss_only(w, x, {0}, LossKind::square, false);
    CHECK(sq == doctest::Approx(4.0 + 1.0).epsilon(1e-12));

    CHECK_THROWS_AS(net.loss_only(w, x, {2}, LossKind::square, false), UsageError);
    CHECK_THROWS_AS(net.loss_only(w, x, {0, 1}, LossKind::square, false), UsageError);
}

TEST_CASE("activation layers share or split the polynomial") {
    NetworkSpec spec = make_convnet({1, 8, 8}, {3, 3}, 4, true, Activation::poly);
    spec.poly.coeffs = {0.0, 0.0, 1.0}; // z^2
    Network net(spec);
    Rng rng(3);
    const WeightSnapshot w = net.init(rng);
    const Tensor x = Tensor({2, 1, 8, 8}, 0.25);
    CHECK_NOTHROW(net.forward(w, x, false));

    // per-layer list must match the activation layer count
    NetworkSpec bad = spec;
    bad.poly_per_layer.resize(1);
    bad.poly_per_layer[0].coeffs = {0.0, 1.0};
    CHECK_THROWS_AS(Network{bad}, UsageError);

    NetworkSpec good = spec;
    good.poly_per_layer.resize(2);
    good.poly_per_layer[0].coeffs = {0.0, 1.0};
    good.poly_per_layer[1].coeffs = {0.0, 1.0};
    Network identity_act(good);
    CHECK_NOTHROW(identity_act.forward(w, x, false));
}

TEST_CASE("snapshot validation names the offender") {
    const NetworkSpec spec = make_convnet({1, 8, 8}, {4}, 10);
    Network net(spec);
    Rng rng(5);
    WeightSnapshot w = net.init(rng);
    CHECK_NOTHROW(net.validate_snapshot(w));

    SUBCASE("missing array") {
        WeightSnapshot bad;
        for (const auto& a : w.arrays())
            if (a.name != "L2.bias") bad.add(a);
        CHECK_THROWS_WITH_AS(net.validate_snapshot(bad), doctest::Contains("L2.bias"),
                             UsageError);
    }
    SUBCASE("wrong shape") {
        WeightSnapshot bad;
        for (const auto& a : w.arrays()) {
            if (a.name == "L1.weight") {
                bad.add({a.name, Tensor({4, 1, 5, 5}), true});
            } else {
                bad.add(a);
            }
        }
        CHECK_THROWS_WITH_AS(net.validate_snapshot(bad), doctest::Contains("L1.weight"),
                             UsageError);
    }
    SUBCASE("unexpected array") {
        WeightSnapshot bad = w;
        bad.add({"L9.weight", Tensor({1}), true});
        CHECK_THROWS_WITH_AS(net.validate_snapshot(bad), doctest::Contains("L9.weight"),
                             UsageError);
    }
}

TEST_CASE("initialization is seed-pinned") {
    const NetworkSpec spec = make_convnet({1, 8, 8}, {4, 4}, 10);
    Network net(spec);
    Rng a(42), b(42), c(43);
    const auto wa = net.init(a).flatten_trainable();
    const auto wb = net.init(b).flatten_trainable();
    const auto wc = net.init(c).flatten_trainable();
    CHECK(wa == wb);
    CHECK(wa != wc);
}
