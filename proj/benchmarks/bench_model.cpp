#include <benchmark/benchmark.h>

#include "ebmlab/model.hpp"
#include "ebmlab/rng.hpp"

using namespace ebmlab;

namespace {

EnergyModel make_model(std::size_t width, std::size_t depth) {
    RngStream rng(1);
    return EnergyModel::random(2, std::vector<std::size_t>(depth, width),
                               Activation::softplus, rng);
}

Tensor make_batch(std::size_t n) {
    RngStream rng(2);
    Tensor batch({n, 2});
    for (double& v : batch.values()) v = rng.normal();
    return batch;
}

}  // namespace

static void EnergyForward(benchmark::State& state) {
    const EnergyModel model = make_model(state.range(0), 3);
    const Tensor batch = make_batch(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(energy_forward(model, batch));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(EnergyForward)->Arg(32)->Arg(64);

static void GradInput(benchmark::State& state) {
    const EnergyModel model = make_model(state.range(0), 3);
    const Tensor batch = make_batch(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(grad_input(model, batch));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(GradInput)->Arg(32)->Arg(64);

static void GradParams(benchmark::State& state) {
    const EnergyModel model = make_model(state.range(0), 3);
    const Tensor batch = make_batch(64);
    const std::vector<double> weights(64, 1.0 / 64.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(grad_params(model, batch, weights));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(GradParams)->Arg(32)->Arg(64);

static void InputGradNormGrad(benchmark::State& state) {
    const EnergyModel model = make_model(state.range(0), 3);
    const Tensor batch = make_batch(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(grad_params_of_input_grad_norm(model, batch));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(InputGradNormGrad)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
