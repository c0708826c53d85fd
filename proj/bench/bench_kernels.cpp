// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <random>

#include "statefusion/kernels.hpp"

using namespace statefusion;

namespace {

Grid random_grid(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Grid g(rows, cols);
    for (auto& v : g.data()) v = dist(gen);
    return g;
}

// Batch of samples with 9 states marginalized onto 15 objects.
template <Grid (*Kernel)(const Grid&, const Grid&)>
void BM_Marginalize(benchmark::State& state) {
    const Grid priors = random_grid(static_cast<std::size_t>(state.range(0)), 9, 1);
    const Grid cond = kernels::normalize_columns_serial(random_grid(15, 9, 2), 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(priors, cond));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Grid (*Kernel)(const Grid&, double)>
void BM_NormalizeColumns(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Grid raw = random_grid(n, n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(raw, 1e-6));
}

template <Grid (*Kernel)(const Grid&)>
void BM_SoftmaxRows(benchmark::State& state) {
    const Grid logits = random_grid(static_cast<std::size_t>(state.range(0)), 15, 4);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(logits));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

// First fusion layer: 48 features into 64 hidden units.
template <Grid (*Kernel)(const Grid&, const Grid&, const std::vector<double>&, bool)>
void BM_Affine(benchmark::State& state) {
    const Grid inputs = random_grid(static_cast<std::size_t>(state.range(0)), 48, 5);
    const Grid weights = random_grid(64, 48, 6);
    const std::vector<double> bias(64, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(inputs, weights, bias, true));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Marginalize<kernels::marginalize_serial>)->Name("marginalize/serial")->Range(512, 1 << 16);
BENCHMARK(BM_Marginalize<kernels::marginalize_omp>)->Name("marginalize/omp")->Range(512, 1 << 16);
BENCHMARK(BM_NormalizeColumns<kernels::normalize_columns_serial>)->Name("normalize_columns/serial")->Range(16, 1024);
BENCHMARK(BM_NormalizeColumns<kernels::normalize_columns_omp>)->Name("normalize_columns/omp")->Range(16, 1024);
BENCHMARK(BM_SoftmaxRows<kernels::softmax_rows_serial>)->Name("softmax_rows/serial")->Range(512, 1 << 16);
BENCHMARK(BM_SoftmaxRows<kernels::softmax_rows_omp>)->Name("softmax_rows/omp")->Range(512, 1 << 16);
BENCHMARK(BM_Affine<kernels::affine_serial>)->Name("affine/serial")->Range(512, 1 << 14);
BENCHMARK(BM_Affine<kernels::affine_omp>)->Name("affine/omp")->Range(512, 1 << 14);
BENCHMARK_MAIN();
