#include <benchmark/benchmark.h>

#include "ebmlab/distributions.hpp"
#include "ebmlab/samplers.hpp"

using namespace ebmlab;

namespace {

DistributionSpec box_spec() {
    const BoxSpec domain{{-4.0, -4.0}, {4.0, 4.0}};
    return DistributionSpec(UniformBoxSpec{domain}, domain);
}

}  // namespace

static void PgdAscendK(benchmark::State& state) {
    RngStream rng(1);
    const EnergyModel model =
        EnergyModel::random(2, {64, 64, 64}, Activation::softplus, rng);
    const Batch start = sample(box_spec(), 64, rng, SourceTag::p0);
    AttackConfig cfg;
    cfg.step_size = 0.1;
    cfg.steps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pgd_ascend(model, start, cfg, rng));
    }
    state.SetItemsProcessed(state.iterations() * 64 * state.range(0));
}
BENCHMARK(PgdAscendK)->Arg(1)->Arg(5)->Arg(25);

static void SgldChainK(benchmark::State& state) {
    RngStream rng(1);
    const EnergyModel model =
        EnergyModel::random(2, {64, 64, 64}, Activation::softplus, rng);
    const Batch start = sample(box_spec(), 64, rng, SourceTag::p0);
    SgldConfig cfg;
    cfg.step_size = 0.1;
    cfg.steps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sgld_chain(model, start, cfg, rng));
    }
    state.SetItemsProcessed(state.iterations() * 64 * state.range(0));
}
BENCHMARK(SgldChainK)->Arg(5)->Arg(25);
