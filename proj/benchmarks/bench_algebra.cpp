#include <benchmark/benchmark.h>

#include "risklab/algebraic.hpp"
#include "risklab/rng.hpp"

using namespace risklab;

static void BM_ZeroSystemExpansion(benchmark::State& state) {
    const TinyPolyNet net = make_tree_net(static_cast<std::size_t>(state.range(0)));
    const std::vector<double> square = {0.0, 0.0, 1.0};
    Rng rng(3);
    std::vector<std::vector<double>> x(4, std::vector<double>(net.n_inputs));
    std::vector<double> y(4, 1.0);
    for (auto& row : x) {
        for (double& v : row) v = rng.gaussian();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_zero_system(net, square, x, y));
    }
}
BENCHMARK(BM_ZeroSystemExpansion)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

static void BM_ZeroCensus(benchmark::State& state) {
    Rng rng(9);
    const PolySystem sys = random_system(2, 2, 3, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(find_real_zeros(sys, {}));
    }
}
BENCHMARK(BM_ZeroCensus)->Unit(benchmark::kMillisecond);
