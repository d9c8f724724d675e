// Micro benchmarks for the three hot paths: clustering, training, metrics.
#include <benchmark/benchmark.h>

#include "drugrec/clustering.hpp"
#include "drugrec/evaluation.hpp"
#include "drugrec/factorization.hpp"
#include "drugrec/random.hpp"
#include "drugrec/recommender.hpp"
#include "support.hpp"

using namespace drugrec;

static void BM_UKMeans(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const double means[3][2] = {{0.0, 0.0}, {0.8, 0.0}, {0.4, 0.7}};
    Matrix x(n, 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 2; ++j) x(i, j) = rng.normal(means[i % 3][j], 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(clustering::ukmeans_fit(x).final_k());
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_UKMeans)->Arg(100)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_Pipeline(benchmark::State& state) {
    const auto data = testing::benchmark_bundle(7);
    const rec::PipelineConfig cfg = testing::benchmark_pipeline(7);
    const auto prepared = rec::prepare_splits(data.bundle, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(rec::build_pipeline(prepared.training, cfg).model);
}
BENCHMARK(BM_Pipeline)->Unit(benchmark::kMillisecond);

static void BM_Metrics(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    std::vector<double> pred(n), actual(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        pred[i] = rng.uniform(0, 10);
        actual[i] = rng.uniform(0, 10);
        y[i] = actual[i] >= 4.0;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval::metrics(eval::binarize_and_count(pred, actual, 4.0)));
        benchmark::DoNotOptimize(eval::roc_auc(pred, y).auc);
    }
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(100000);
BENCHMARK_MAIN();
