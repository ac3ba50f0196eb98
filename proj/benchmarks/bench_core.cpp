#include <benchmark/benchmark.h>

#include "adjfas/bayesnet.hpp"
#include "adjfas/score.hpp"
#include "adjfas/sim.hpp"

using namespace adjfas;

namespace {

struct Fixture {
    sim::GroundTruth gt;
    sim::Datasets ds;
};

Fixture make(int n_observed, int n_obs) {
    sim::SimConfig cfg;
    cfg.n_observed = n_observed;
    cfg.n_latent = 2;
    cfg.n_obs = n_obs;
    Rng rng(derive_seed(11, {static_cast<std::uint64_t>(n_observed)}));
    Fixture f;
    f.gt = sim::generate_world(cfg, rng);
    f.ds = sim::sample_datasets(f.gt, cfg, rng);
    return f;
}

void BM_VariableElimination(benchmark::State& state) {
    const auto f = make(static_cast<int>(state.range(0)), 100);
    std::vector<int> query{f.gt.y};
    bayesnet::Assignment ev{{f.gt.x, 0}};
    for (auto _ : state) benchmark::DoNotOptimize(bayesnet::joint_with_evidence(f.gt.world, query, ev));
}
BENCHMARK(BM_VariableElimination)->Arg(4)->Arg(6)->Arg(10);

void BM_StructureLearning(benchmark::State& state) {
    const auto f = make(static_cast<int>(state.range(0)), 10000);
    bayesnet::StructureConfig sc{1.0, 4, 1, 3};
    for (auto _ : state) benchmark::DoNotOptimize(bayesnet::learn_structure(f.ds.observational, sc));
}
BENCHMARK(BM_StructureLearning)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ScoreExpArm(benchmark::State& state) {
    const auto f = make(6, 10000);
    const auto& t = f.ds.observational;
    const auto dag = bayesnet::learn_structure(t, bayesnet::StructureConfig{1.0, 4, 1, 3});
    const auto post = bayesnet::fit_posterior(dag, t, 1.0);
    const int x = static_cast<int>(t.index_of("X")), y = static_cast<int>(t.index_of("Y"));
    std::vector<int> z;
    for (std::size_t v = 0; v < t.num_vars() && z.size() < 2; ++v)
        if (static_cast<int>(v) != x && static_cast<int>(v) != y) z.push_back(static_cast<int>(v));
    const auto& arm = f.ds.experiment.arms.front();
    for (auto _ : state)
        benchmark::DoNotOptimize(score::score_exp_arm(post, x, y, z, arm, static_cast<int>(state.range(0)), 1));
}
BENCHMARK(BM_ScoreExpArm)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FindAdjustmentSet(benchmark::State& state) {
    const auto f = make(6, 10000);
    score::FasConfig fc;
    fc.seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(score::find_adjustment_set(f.ds.observational, f.ds.experiment, fc));
}
BENCHMARK(BM_FindAdjustmentSet)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
