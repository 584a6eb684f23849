#include <benchmark/benchmark.h>

#include <memory>

#include "surropt/harness.hpp"
#include "surropt/rng.hpp"
#include "surropt/surrogate.hpp"
#include "surropt/traffic.hpp"

namespace {

using namespace surropt;

const traffic::TrafficScenario& desk_scenario() {
    static const auto sc = traffic::build_scenario({});
    return sc;
}

void BM_Simulate(benchmark::State& state) {
    const auto& sc = desk_scenario();
    Rng rng(1);
    const auto plan = harness::random_plan(sc.dimension(), {5, 60}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(traffic::simulate(sc, plan));
}
BENCHMARK(BM_Simulate);

void BM_Forward(benchmark::State& state) {
    const auto model = surrogate::init_model(surrogate::default_layer_dims(36), 1);
    Rng rng(2);
    const auto plan = harness::random_plan(36, {5, 60}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(surrogate::forward(model, plan));
}
BENCHMARK(BM_Forward);

void BM_TrainEpoch(benchmark::State& state) {
    auto sc = std::make_shared<const traffic::TrafficScenario>(desk_scenario());
    traffic::Evaluator f(sc);
    const auto data = harness::build_archive(f, static_cast<int>(state.range(0)), 3);
    auto model = surrogate::init_model(surrogate::default_layer_dims(36), 4);
    surrogate::set_input_range(model, f.bounds());
    const surrogate::TrainConfig cfg{.epochs = 1};
    for (auto _ : state) benchmark::DoNotOptimize(surrogate::train(model, data, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpoch)->Arg(128)->Arg(512)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
