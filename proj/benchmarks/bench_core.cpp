#include <benchmark/benchmark.h>

#include "tti/bo.hpp"
#include "tti/inspect.hpp"
#include "tti/model.hpp"
#include "tti/orchestrator.hpp"
#include "tti/rng.hpp"
#include "tti/trust.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    tti::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

void BM_LocalTrain(benchmark::State& state) {
    auto data = tti::generate_dataset(10, 32, 5, 0.3, 1);
    auto model = tti::init_model({32, {64, 32}, 10}, 2);
    tti::TrainConfig cfg{0.08, 2, 16, 3};
    for (auto _ : state) {
        auto [trained, delta] = tti::local_train(model, data, cfg, tti::LossSpec{});
        benchmark::DoNotOptimize(delta.delta.data());
    }
}
BENCHMARK(BM_LocalTrain);

void BM_Indicators(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    auto delta = random_vector(n, 1);
    auto global = random_vector(n, 2);
    for (auto _ : state) {
        auto ind = tti::compute_indicators(delta, global);
        benchmark::DoNotOptimize(ind.spikiness);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Indicators)->Range(1 << 10, 1 << 16)->Complexity();

void BM_AhcTwo(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = random_vector(9, i + 7);
    for (auto _ : state) {
        auto clusters = tti::ahc_two(rows);
        benchmark::DoNotOptimize(clusters[0].data());
    }
}
BENCHMARK(BM_AhcTwo)->Arg(6)->Arg(12)->Arg(20);

void BM_GpFitPredict(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    tti::Rng rng(5);
    std::vector<std::vector<double>> inputs(n);
    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        inputs[i] = tti::sample_dirichlet(3, rng);
        targets[i] = inputs[i][0] - 0.5 * inputs[i][1];
    }
    std::vector<std::vector<double>> queries(128);
    for (auto& q : queries) q = tti::sample_dirichlet(3, rng);
    std::vector<double> mean, sd;
    for (auto _ : state) {
        tti::gp_fit_predict(inputs, targets, queries, 1e-6, mean, sd);
        benchmark::DoNotOptimize(mean.data());
    }
}
BENCHMARK(BM_GpFitPredict)->Arg(8)->Arg(16)->Arg(32);

void BM_SimulationRound(benchmark::State& state) {
    tti::ScenarioConfig cfg;
    cfg.rounds = 1;
    cfg.warmup_rounds = 0;
    cfg.attack.kind = tti::AttackKind::BoundedScaling;
    cfg.defense = tti::DefenseMode::Tti;
    for (auto _ : state) {
        tti::Simulation sim(cfg);
        auto rec = sim.step();
        benchmark::DoNotOptimize(rec.mta);
    }
}
BENCHMARK(BM_SimulationRound);

}  // namespace

BENCHMARK_MAIN();
