#include <benchmark/benchmark.h>

#include "risklab/dataset.hpp"
#include "risklab/net.hpp"
#include "risklab/rng.hpp"
#include "risklab/trainer.hpp"

using namespace risklab;

namespace {

Dataset bench_data(std::size_t n) {
    SyntheticSpec spec;
    spec.classes = 10;
    spec.dims = {1, 8, 8};
    spec.n_train = n;
    spec.n_test = 0;
    return make_synthetic(spec, 7);
}

} // namespace

static void BM_ForwardEval(benchmark::State& state) {
    const Dataset data = bench_data(500);
    Network net(make_convnet({1, 8, 8}, {8, 12, 16}, 10));
    Rng rng(1);
    const WeightSnapshot w = net.init(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            net.evaluate(w, data.train_x, data.train_y, LossKind::cross_entropy));
    }
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_ForwardEval)->Unit(benchmark::kMillisecond);

static void BM_FullBatchGradient(benchmark::State& state) {
    const Dataset data = bench_data(500);
    Network net(make_convnet({1, 8, 8}, {8, 12, 16}, 10));
    Rng rng(1);
    const WeightSnapshot w = net.init(rng);
    for (auto _ : state) {
        WeightSnapshot grads;
        benchmark::DoNotOptimize(net.loss_and_grad(w, data.train_x, data.train_y,
                                                   LossKind::cross_entropy, &grads));
    }
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_FullBatchGradient)->Unit(benchmark::kMillisecond);

static void BM_SgdEpoch(benchmark::State& state) {
    const Dataset data = bench_data(500);
    Network net(make_convnet({1, 8, 8}, {8, 12, 16}, 10));
    Rng rng(1);
    const WeightSnapshot w0 = net.init(rng);
    TrainOptions opt;
    opt.mode = TrainMode::sgd;
    opt.epochs = 1;
    opt.batch_size = 100;
    opt.lr = 0.01;
    opt.eval_every = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(net, w0, data, opt));
    }
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_SgdEpoch)->Unit(benchmark::kMillisecond);

static void BM_Perturb(benchmark::State& state) {
    Network net(make_convnet({1, 8, 8}, {8, 12, 16}, 10));
    Rng rng(1);
    const WeightSnapshot w = net.init(rng);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(perturb(w, 0.1, PerturbMode::layer_std, ++seed));
    }
}
BENCHMARK(BM_Perturb)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
