// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <numeric>

#include "cnet/kernels.hpp"

namespace {

cnet::Matrix random_matrix(cnet::Rng& rng, std::size_t rows, std::size_t cols) {
    cnet::Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform();
    return m;
}

cnet::NeuralNet random_net(std::size_t n_x) {
    auto net = cnet::make_network(n_x, cnet::NetConfig{});
    cnet::Rng rng(1);
    cnet::initialize(net, rng);
    return net;
}

template <bool Parallel>
void BM_PredictBatch(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const auto net = random_net(8);
    cnet::Rng rng(2);
    const auto X = random_matrix(rng, rows, 8);
    for (auto _ : state) {
        auto out = Parallel ? cnet::kernels::predict_batch(net, X) : cnet::kernels::serial::predict_batch(net, X);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_MinSquaredDistance(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    cnet::Rng rng(3);
    const auto memory = random_matrix(rng, rows, 8);
    const auto query = random_matrix(rng, 1, 8);
    for (auto _ : state) {
        const double d = Parallel ? cnet::kernels::min_squared_distance(memory, query.row(0))
                                  : cnet::kernels::serial::min_squared_distance(memory, query.row(0));
        benchmark::DoNotOptimize(d);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_BestSplit(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    cnet::Rng rng(4);
    const auto X = random_matrix(rng, rows, 8);
    std::vector<double> y(rows);
    for (double& v : y) v = rng.uniform(-1, 1);
    std::vector<std::size_t> index(rows);
    std::iota(index.begin(), index.end(), std::size_t{0});
    const cnet::ForestParams params;
    for (auto _ : state) {
        const auto split = Parallel ? cnet::kernels::best_split(X, y, index, params)
                                    : cnet::kernels::serial::best_split(X, y, index, params);
        benchmark::DoNotOptimize(split.gain);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PredictBatch<false>)->Name("predict_batch/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_PredictBatch<true>)->Name("predict_batch/omp")->Arg(1000)->Arg(10000);
BENCHMARK(BM_MinSquaredDistance<false>)->Name("min_distance/serial")->Arg(1000)->Arg(100000);
BENCHMARK(BM_MinSquaredDistance<true>)->Name("min_distance/omp")->Arg(1000)->Arg(100000);
BENCHMARK(BM_BestSplit<false>)->Name("best_split/serial")->Arg(1000)->Arg(20000);
BENCHMARK(BM_BestSplit<true>)->Name("best_split/omp")->Arg(1000)->Arg(20000);

BENCHMARK_MAIN();
