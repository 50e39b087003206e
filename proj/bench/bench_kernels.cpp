// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to vary the
// thread count of the parallel versions.

#include <benchmark/benchmark.h>

#include "noisegate/kernels.hpp"
#include "noisegate/random.hpp"

using namespace noisegate;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.normal();
    return m;
}

template <bool Parallel>
void BM_Knn(benchmark::State& state) {
    const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 32, 1);
    for (auto _ : state) {
        auto nn = Parallel ? kernels::knn(x, 10) : kernels::serial::knn(x, 10);
        benchmark::DoNotOptimize(nn);
    }
    state.SetComplexityN(state.range(0));
}

template <bool Parallel>
void BM_Distances(benchmark::State& state) {
    const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 32, 2);
    for (auto _ : state) {
        auto d = Parallel ? kernels::pairwise_sq_distances(x) : kernels::serial::pairwise_sq_distances(x);
        benchmark::DoNotOptimize(d);
    }
}

template <bool Parallel>
void BM_Affine(benchmark::State& state) {
    const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 16, 3);
    const auto w = random_matrix(32, 16, 4);
    const std::vector<double> b(32, 0.1);
    for (auto _ : state) {
        auto out = Parallel ? kernels::affine(x, w, b, true) : kernels::serial::affine(x, w, b, true);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Knn<false>)->Name("knn/serial")->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Knn<true>)->Name("knn/omp")->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distances<false>)->Name("distances/serial")->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distances<true>)->Name("distances/omp")->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Affine<false>)->Name("affine/serial")->Arg(1024)->Arg(16384)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Affine<true>)->Name("affine/omp")->Arg(1024)->Arg(16384)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
