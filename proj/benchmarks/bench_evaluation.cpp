#include <benchmark/benchmark.h>

#include "ebmlab/evaluation.hpp"
#include "ebmlab/optimizer.hpp"

using namespace ebmlab;

static void Mmd2(benchmark::State& state) {
    RngStream rng(1);
    const BoxSpec domain{{-4.0, -4.0}, {4.0, 4.0}};
    const DistributionSpec spec(
        GaussianSpec{{0.0, 0.0}, Tensor({2, 2}, {0.5, 0.0, 0.0, 0.5})}, domain);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const Batch a = sample(spec, n, rng);
    const Batch b = sample(spec, n, rng);
    const std::vector<double> bandwidths{0.25, 0.5, 1.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(mmd2(a, b, bandwidths));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(Mmd2)->Arg(128)->Arg(256)->Arg(512)->Complexity(benchmark::oNSquared);

static void AurocRank(benchmark::State& state) {
    RngStream rng(2);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<double> in(n), out(n);
    for (double& v : in) v = rng.normal(1.0, 1.0);
    for (double& v : out) v = rng.normal(-1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ood_auroc(in, out));
    }
}
BENCHMARK(AurocRank)->Arg(512)->Arg(4096);

static void AdamStep(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    ParamVector theta = ParamVector::zeros(n);
    ParamVector grad = ParamVector::zeros(n);
    for (std::size_t i = 0; i < n; ++i) grad[i] = 0.01 * static_cast<double>(i % 7);
    OptimizerState opt = OptimizerState::zeros(n);
    const AdamConfig cfg;
    for (auto _ : state) {
        adam_step(theta, grad, opt, cfg);
        benchmark::DoNotOptimize(theta);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(AdamStep)->Arg(8577);
