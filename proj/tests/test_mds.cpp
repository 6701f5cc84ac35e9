#include "doctest.h"

#include "risklab/errors.hpp"
#include "risklab/mds.hpp"
#include "risklab/rng.hpp"

#include "procrustes.hpp"

#include <cmath>
#include <vector>

using namespace risklab;

namespace {

DissimilarityMatrix euclidean_matrix(const std::vector<double>& pts, std::size_t n,
                                     std::size_t dim) {
    DissimilarityMatrix dm;
    dm.n = n;
    dm.d.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = pts[i * dim + k] - pts[j * dim + k];
                s += d * d;
            }
            dm.d[i * n + j] = std::sqrt(s);
        }
    }
    return dm;
}

} // namespace

TEST_CASE("planted planar configurations are recovered exactly") {
    for (std::size_t n : {std::size_t{3}, std::size_t{10}, std::size_t{50}}) {
        Rng rng(1000 + n);
        std::vector<double> pts(n * 2);
        for (double& v : pts) v = rng.uniform(-5.0, 5.0);

        const DissimilarityMatrix dm = euclidean_matrix(pts, n, 2);
        const MdsResult res = classical_mds(dm, 2);
        REQUIRE(res.coords.size() == n * 2);
        const double rmse = testsup::procrustes_rmse_2d(pts, res.coords, n);
        CHECK(rmse <= 1e-6);
        CHECK(res.strain <= 1e-6);
        for (std::size_t j = 0; j + 1 < res.eigenvalues.size(); ++j) {
            CHECK(res.eigenvalues[j] >= res.eigenvalues[j + 1]);
        }
    }
}

TEST_CASE("a 3d configuration leaves strain behind in the plane") {
    Rng rng(77);
    const std::size_t n = 20;
    std::vector<double> pts(n * 3);
    for (double& v : pts) v = rng.gaussian();
    const MdsResult res = classical_mds(euclidean_matrix(pts, n, 3), 2);
    CHECK(res.strain > 0.01);
}

TEST_CASE("cosine dissimilarities ignore positive per-vector scaling") {
    Rng rng(42);
    std::vector<std::vector<double>> vecs(6, std::vector<double>(40));
    for (auto& v : vecs)
        for (double& x : v) x = rng.gaussian();

    std::vector<std::vector<double>> scaled = vecs;
    const double scales[6] = {0.001, 3.0, 17.5, 0.25, 1000.0, 1.0};
    for (std::size_t i = 0; i < scaled.size(); ++i)
        for (double& x : scaled[i]) x *= scales[i];

    const DissimilarityMatrix a = pairwise_dissimilarity(vecs, Metric::cosine);
    const DissimilarityMatrix b = pairwise_dissimilarity(scaled, Metric::cosine);
    REQUIRE(a.d.size() == b.d.size());
    for (std::size_t i = 0; i < a.d.size(); ++i) {
        CHECK(std::abs(a.d[i] - b.d[i]) <= 1e-12);
    }

    // euclidean distances, by contrast, scale
    const DissimilarityMatrix e1 = pairwise_dissimilarity(vecs, Metric::euclidean);
    const DissimilarityMatrix e2 = pairwise_dissimilarity(scaled, Metric::euclidean);
    CHECK(e1.at(0, 1) != doctest::Approx(e2.at(0, 1)).epsilon(1e-6));
}

TEST_CASE("dissimilarity matrices are symmetric with zero diagonal") {
    Rng rng(9);
    std::vector<std::vector<double>> vecs(4, std::vector<double>(8));
    for (auto& v : vecs)
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
    for (const Metric m : {Metric::cosine, Metric::euclidean}) {
        const DissimilarityMatrix dm = pairwise_dissimilarity(vecs, m);
        for (std::size_t i = 0; i < dm.n; ++i) {
            CHECK(dm.at(i, i) == 0.0);
            for (std::size_t j = 0; j < dm.n; ++j) CHECK(dm.at(i, j) == dm.at(j, i));
        }
    }
}

TEST_CASE("zero-norm vectors poison cosine and are rejected downstream") {
    const std::vector<std::vector<double>> vecs = {{0.0, 0.0}, {1.0, 2.0}, {3.0, 1.0}};
    const DissimilarityMatrix dm = pairwise_dissimilarity(vecs, Metric::cosine);
    CHECK(std::isnan(dm.at(0, 1)));
    CHECK(!std::isnan(dm.at(1, 2)));
    CHECK_THROWS_AS(classical_mds(dm, 2), UsageError);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(pairwise_dissimilarity({{1.0, 2.0}}, Metric::cosine), UsageError);
    CHECK_THROWS_AS(pairwise_dissimilarity({{1.0}, {1.0, 2.0}}, Metric::cosine),
                    UsageError);
    DissimilarityMatrix dm;
    dm.n = 3;
    dm.d.assign(9, 1.0);
    for (std::size_t i = 0; i < 3; ++i) dm.d[i * 3 + i] = 0.0;
    CHECK_THROWS_AS(classical_mds(dm, 0), UsageError);
    CHECK_THROWS_AS(classical_mds(dm, 4), UsageError);
    dm.d.resize(8);
    CHECK_THROWS_AS(classical_mds(dm, 2), UsageError);

    CHECK(metric_from_string("cosine") == Metric::cosine);
    CHECK(metric_from_string("euclidean") == Metric::euclidean);
    CHECK_THROWS_AS(metric_from_string("manhattan"), UsageError);
}

TEST_CASE("an equilateral triangle embeds at unit side length") {
    DissimilarityMatrix dm;
    dm.n = 3;
    dm.d = {0, 1, 1, 1, 0, 1, 1, 1, 0};
    const MdsResult res = classical_mds(dm, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) {
            const double dx = res.coords[i * 2] - res.coords[j * 2];
            const double dy = res.coords[i * 2 + 1] - res.coords[j * 2 + 1];
            CHECK(std::sqrt(dx * dx + dy * dy) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}
