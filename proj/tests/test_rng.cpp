#include "doctest.h"

#include "risklab/errors.hpp"
#include "risklab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace risklab;

TEST_CASE("splitmix64 matches the reference sequence") {
    std::uint64_t state = 1234567;
    CHECK(splitmix64(state) == 6457827717110365317ULL);
    CHECK(splitmix64(state) == 3203168211198807973ULL);
    CHECK(splitmix64(state) == 9817491932198370423ULL);
}

TEST_CASE("derive_seed is a pure function of master and stream") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));

    // neighboring small masters must not collide across small streams
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 32; ++m)
        for (std::uint64_t s = 0; s < 32; ++s) seen.insert(derive_seed(m, s));
    CHECK(seen.size() == 32 * 32);
}

TEST_CASE("same seed, same stream of draws") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(99), d(99);
    for (int i = 0; i < 100; ++i) CHECK(c.gaussian() == d.gaussian());
}

TEST_CASE("uniform stays in range and fills it") {
    Rng r(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);

    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform(-3.0, 5.0);
        CHECK(u >= -3.0);
        CHECK(u < 5.0);
    }
}

TEST_CASE("gaussian moments") {
    Rng r(11);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gaussian();
        sum += g;
        sumsq += g * g;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);

    Rng r2(11);
    const double shifted = r2.gaussian(10.0, 0.5);
    Rng r3(11);
    CHECK(shifted == doctest::Approx(10.0 + 0.5 * r3.gaussian()).epsilon(1e-15));
}

TEST_CASE("below is unbiased across its range") {
    Rng r(5);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 100000; ++i) {
        const auto v = r.below(10);
        REQUIRE(v < 10);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
    CHECK_THROWS_AS(r.below(0), UsageError);
}

TEST_CASE("permutation is a bijection and seed-stable") {
    Rng a(3), b(3);
    const auto p = a.permutation(257);
    const auto q = b.permutation(257);
    CHECK(p == q);
    std::vector<bool> hit(257, false);
    for (std::size_t i : p) {
        REQUIRE(i < 257);
        CHECK(!hit[i]);
        hit[i] = true;
    }
}

TEST_CASE("streams are independent of query order") {
    Rng a(123), b(123);
    Rng a5 = a.stream(5);
    Rng a3 = a.stream(3);
    Rng b3 = b.stream(3);
    Rng b5 = b.stream(5);
    CHECK(a3.next_u64() == b3.next_u64());
    CHECK(a5.next_u64() == b5.next_u64());
    Rng c3 = Rng(123).stream(3);
    Rng d3 = Rng(123).stream(5);
    CHECK(c3.next_u64() != d3.next_u64());
}
