// Parallel kernels against their serial references on one target-sized input.
// Run with OMP_NUM_THREADS to pick the worker count for the parallel rows.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "reid/metric.hpp"
#include "reid/metric_serial.hpp"

using namespace reid;

namespace {

Matrix points(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Matrix m(n, d);
    for (double& v : m.data()) v = nd(gen);
    return m;
}

const Matrix& target(std::size_t n) {
    static std::map<std::size_t, Matrix> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, points(n, 16, n)).first;
    return it->second;
}

constexpr int kK = 20;

template <bool Parallel>
void BM_SqEuclidean(benchmark::State& state) {
    const auto& x = target(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto d = Parallel ? sq_euclidean_matrix(x) : serial::sq_euclidean_matrix(x);
        benchmark::DoNotOptimize(d.values.data().data());
    }
}

template <bool Parallel>
void BM_Kernelized(benchmark::State& state) {
    const auto& x = target(static_cast<std::size_t>(state.range(0)));
    const auto sq = serial::sq_euclidean_matrix(x);
    const auto robust = robust_sets(sq, kK);
    for (auto _ : state) {
        auto d = Parallel ? kernelized_matrix(sq, robust) : serial::kernelized_matrix(sq, robust);
        benchmark::DoNotOptimize(d.values.data().data());
    }
}

template <bool Parallel>
void BM_Jaccard(benchmark::State& state) {
    const auto& x = target(static_cast<std::size_t>(state.range(0)));
    const auto sq = serial::sq_euclidean_matrix(x);
    const auto ker = serial::kernelized_matrix(sq, robust_sets(sq, kK));
    for (auto _ : state) {
        auto d = Parallel ? jaccard_distance(ker) : serial::jaccard_distance(ker);
        benchmark::DoNotOptimize(d.values.data().data());
    }
}

template <bool Parallel>
void BM_KnnLists(benchmark::State& state) {
    const auto sq = serial::sq_euclidean_matrix(target(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) {
        auto l = Parallel ? knn_lists(sq, kK) : serial::knn_lists(sq, kK);
        benchmark::DoNotOptimize(l.data());
    }
}

template <bool Parallel>
void BM_WeightConfidence(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto& x = target(n);
    const auto src = points(n, 16, n + 1);
    for (auto _ : state) {
        auto w = Parallel ? weight_confidence(x, src) : serial::weight_confidence(x, src);
        benchmark::DoNotOptimize(w.raw.data());
    }
}

}  // namespace

#define REID_PAIR(fn)                                                                             \
    BENCHMARK(fn<false>)->Name(#fn "/serial")->Arg(640)->Arg(2000)->Unit(benchmark::kMillisecond); \
    BENCHMARK(fn<true>)->Name(#fn "/parallel")->Arg(640)->Arg(2000)->Unit(benchmark::kMillisecond)

REID_PAIR(BM_SqEuclidean);
REID_PAIR(BM_Kernelized);
REID_PAIR(BM_Jaccard);
REID_PAIR(BM_KnnLists);
REID_PAIR(BM_WeightConfidence);

BENCHMARK_MAIN();
