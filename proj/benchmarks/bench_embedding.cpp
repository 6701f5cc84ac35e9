#include <benchmark/benchmark.h>

#include "risklab/mds.hpp"
#include "risklab/rng.hpp"

#include <vector>

using namespace risklab;

namespace {

std::vector<std::vector<double>> random_vectors(std::size_t n, std::size_t dim) {
    Rng rng(11);
    std::vector<std::vector<double>> vecs(n, std::vector<double>(dim));
    for (auto& v : vecs) {
        for (double& x : v) x = rng.gaussian();
    }
    return vecs;
}

} // namespace

static void BM_PairwiseCosine(benchmark::State& state) {
    const auto vecs = random_vectors(static_cast<std::size_t>(state.range(0)), 5000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairwise_dissimilarity(vecs, Metric::cosine));
    }
}
BENCHMARK(BM_PairwiseCosine)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);

static void BM_ClassicalMds(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto vecs = random_vectors(n, 64);
    const DissimilarityMatrix dm = pairwise_dissimilarity(vecs, Metric::euclidean);
    for (auto _ : state) {
        benchmark::DoNotOptimize(classical_mds(dm, 2));
    }
}
BENCHMARK(BM_ClassicalMds)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);
