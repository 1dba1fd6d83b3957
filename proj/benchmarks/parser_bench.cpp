#include <benchmark/benchmark.h>

#include "ltree/parser/eisner.hpp"
#include "ltree/sampler/rng.hpp"

using namespace ltree;

namespace
{

Tensor<double> random_scores(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    Tensor<double> w(Shape{n + 1, n + 1});
    for (auto& v : w.data())
        v = rng.normal();
    return w;
}

void BM_eisner_map(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor<double> w = random_scores(n, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(eisner_map(w).score);
    state.SetComplexityN(state.range(0));
}

void BM_relaxed_forward_backward(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor<double> w = random_scores(n, 2);
    Tensor<double> adjoint(Shape{n + 1, n + 1});
    adjoint.fill(1.0);
    Chart<double> chart(n);
    for (auto _ : state)
    {
        eisner_relaxed_forward(w, 1.0, chart);
        benchmark::DoNotOptimize(eisner_backtrack(chart));
        benchmark::DoNotOptimize(eisner_relaxed_backward(chart, adjoint));
    }
    state.SetComplexityN(state.range(0));
}

}

BENCHMARK(BM_eisner_map)->RangeMultiplier(2)->Range(10, 80)->Complexity(benchmark::oNCubed);
BENCHMARK(BM_relaxed_forward_backward)->RangeMultiplier(2)->Range(10, 80)->Complexity(benchmark::oNCubed);
BENCHMARK_MAIN();
