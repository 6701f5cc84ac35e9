#include "doctest.h"

#include "risklab/dataset.hpp"
#include "risklab/errors.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

using namespace risklab;

namespace {

std::map<int, int> histogram(const std::vector<int>& y) {
    std::map<int, int> h;
    for (int v : y) ++h[v];
    return h;
}

// one fake CIFAR-style file: n records per class, deterministic pixels
std::string write_fake_cifar(const testsup::TempDir& tmp, const std::string& name,
                             int per_class) {
    std::string bytes;
    for (int c = 0; c < 10; ++c) {
        for (int i = 0; i < per_class; ++i) {
            bytes.push_back(static_cast<char>(c));
            for (int k = 0; k < 3072; ++k) {
                bytes.push_back(static_cast<char>((c * 7 + i * 13 + k) % 256));
            }
        }
    }
    const std::string path = tmp.file(name);
    testsup::spit(path, bytes);
    return path;
}

} // namespace

TEST_CASE("synthetic data is balanced, shaped and seed-stable") {
    SyntheticSpec spec;
    spec.classes = 5;
    spec.dims = {1, 4, 4};
    spec.n_train = 50;
    spec.n_test = 25;
    const Dataset a = make_synthetic(spec, 7);
    const Dataset b = make_synthetic(spec, 7);
    const Dataset c = make_synthetic(spec, 8);

    CHECK(a.train_size() == 50);
    CHECK(a.test_size() == 25);
    CHECK(a.sample_shape() == std::vector<std::size_t>{1, 4, 4});
    for (const auto& [cls, count] : histogram(a.train_y)) {
        CHECK(cls >= 0);
        CHECK(cls < 5);
        CHECK(count == 10);
    }
    for (const auto& [cls, count] : histogram(a.test_y)) CHECK(count == 5);

    CHECK(a.train_x.values() == b.train_x.values());
    CHECK(a.train_y == b.train_y);
    CHECK(a.train_x.values() != c.train_x.values());

    // train order is shuffled: the labels are not sorted by class
    CHECK(!std::is_sorted(a.train_y.begin(), a.train_y.end()));
}

TEST_CASE("synthetic sizes must divide by the class count") {
    SyntheticSpec spec;
    spec.classes = 3;
    spec.n_train = 10;
    CHECK_THROWS_AS(make_synthetic(spec, 1), UsageError);
}

TEST_CASE("label randomization permutes train labels only") {
    SyntheticSpec spec;
    spec.classes = 4;
    spec.n_train = 40;
    spec.n_test = 20;
    Dataset d = make_synthetic(spec, 3);
    const auto train_before = d.train_y;
    const auto test_before = d.test_y;
    const auto x_before = d.train_x.values();

    randomize_labels(d, 99);
    CHECK(d.test_y == test_before);
    CHECK(d.train_x.values() == x_before);
    CHECK(d.train_y != train_before); // 40 labels: a fixed permutation is absurdly unlikely
    auto sorted_after = d.train_y;
    auto sorted_before = train_before;
    std::sort(sorted_after.begin(), sorted_after.end());
    std::sort(sorted_before.begin(), sorted_before.end());
    CHECK(sorted_after == sorted_before);

    Dataset d2 = make_synthetic(spec, 3);
    randomize_labels(d2, 99);
    CHECK(d2.train_y == d.train_y);
}

TEST_CASE("balanced subsets draw per class without replacement") {
    SyntheticSpec spec;
    spec.classes = 5;
    spec.n_train = 100;
    spec.n_test = 50;
    const Dataset full = make_synthetic(spec, 11);

    const Dataset sub = balanced_subset(full, 20, 10, 42);
    CHECK(sub.train_size() == 20);
    CHECK(sub.test_size() == 10);
    for (const auto& [cls, count] : histogram(sub.train_y)) CHECK(count == 4);
    for (const auto& [cls, count] : histogram(sub.test_y)) CHECK(count == 2);

    const Dataset again = balanced_subset(full, 20, 10, 42);
    CHECK(again.train_x.values() == sub.train_x.values());
    CHECK(again.train_y == sub.train_y);

    // 0 keeps the split whole
    const Dataset keep = balanced_subset(full, 20, 0, 42);
    CHECK(keep.test_size() == 50);
    CHECK(keep.test_x.values() == full.test_x.values());

    CHECK_THROWS_AS(balanced_subset(full, 7, 0, 1), UsageError);
    CHECK_THROWS_AS(balanced_subset(full, 200, 0, 1), UsageError);
}

TEST_CASE("cifar loader reads single-file pools") {
    testsup::TempDir tmp("cifar");
    const std::string path = write_fake_cifar(tmp, "pool.bin", 4);

    CifarOptions opt;
    opt.n_train = 20;
    opt.n_test = 10;
    opt.normalize = false;
    const Dataset d = load_cifar10(path, opt, 5);
    CHECK(d.train_size() == 20);
    CHECK(d.test_size() == 10);
    CHECK(d.classes == 10);
    CHECK(d.sample_shape() == std::vector<std::size_t>{3, 32, 32});
    for (const auto& [cls, count] : histogram(d.train_y)) CHECK(count == 2);

    // raw pixels are scaled into [0,1]
    double lo = 1e9, hi = -1e9;
    for (double v : d.train_x.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);

    const Dataset e = load_cifar10(path, opt, 5);
    CHECK(e.train_x.values() == d.train_x.values());
    CHECK(e.train_y == d.train_y);
}

TEST_CASE("cifar normalization centers the train channels") {
    testsup::TempDir tmp("cifar");
    const std::string path = write_fake_cifar(tmp, "pool.bin", 3);
    CifarOptions opt;
    opt.n_train = 20;
    opt.n_test = 10;
    opt.normalize = true;
    const Dataset d = load_cifar10(path, opt, 5);

    const std::size_t plane = 32 * 32;
    for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0, sq = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < d.train_size(); ++i) {
            const double* p = d.train_x.data() + (i * 3 + c) * plane;
            for (std::size_t k = 0; k < plane; ++k) {
                s += p[k];
                sq += p[k] * p[k];
                ++cnt;
            }
        }
        const double mean = s / cnt;
        const double var = sq / cnt - mean * mean;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("cifar loader names the offending file and record") {
    testsup::TempDir tmp("cifar");

    SUBCASE("bad size") {
        testsup::spit(tmp.file("short.bin"), std::string(3072, '\0'));
        CHECK_THROWS_WITH_AS(load_cifar10(tmp.file("short.bin"), {}, 1),
                             doctest::Contains("3072"), UsageError);
    }
    SUBCASE("bad label byte") {
        std::string bytes(3073 * 2, '\0');
        bytes[3073] = 11; // record 1 carries label 11
        testsup::spit(tmp.file("badlabel.bin"), bytes);
        CHECK_THROWS_WITH_AS(load_cifar10(tmp.file("badlabel.bin"), {}, 1),
                             doctest::Contains("record 1"), UsageError);
    }
    SUBCASE("missing path") {
        CHECK_THROWS_AS(load_cifar10(tmp.file("nothere.bin"), {}, 1), UsageError);
    }
    SUBCASE("directory missing batches") {
        CHECK_THROWS_WITH_AS(load_cifar10(tmp.path(), {}, 1),
                             doctest::Contains("data_batch_1"), UsageError);
    }
    SUBCASE("subset larger than a class") {
        const std::string path = write_fake_cifar(tmp, "pool.bin", 2);
        CifarOptions opt;
        opt.n_train = 100;
        CHECK_THROWS_WITH_AS(load_cifar10(path, opt, 1), doctest::Contains("class"),
                             UsageError);
    }
}
