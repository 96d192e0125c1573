#include <benchmark/benchmark.h>

#include "hmtl/driver.hpp"
#include "hmtl/model_core.hpp"
#include "hmtl/omega_solver.hpp"
#include "hmtl/synthetic.hpp"
#include "hmtl/theta_solver.hpp"

using namespace hmtl;

namespace {

SyntheticData dataset(Index T, Index m, Index d, Index n) {
    SyntheticSpec spec;
    spec.T = T;
    spec.m = m;
    spec.d = d;
    spec.n = n;
    return generate_hierarchical_dataset(spec);
}

void BM_ThetaStep(benchmark::State& state) {
    const Index m = state.range(0), d = state.range(1);
    const auto syn = dataset(1, m, d, 30);
    const Matrix omega = syn.true_precisions.omegas[0];
    const Matrix init = initial_weights(1, d, m, 42).thetas[0];
    ThetaSolveConfig cfg;
    cfg.precondition = state.range(2) != 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_theta_step(syn.data.super_tasks[0], omega, 0.1, init, cfg));
}
BENCHMARK(BM_ThetaStep)->Args({15, 50, 1})->Args({15, 50, 0})->Args({25, 32, 1})->Unit(benchmark::kMillisecond);

void BM_OmegaStep(benchmark::State& state) {
    const Index T = state.range(0), m = state.range(1);
    const auto syn = dataset(T, m, 50, 10);
    std::vector<Matrix> s_set;
    for (const auto& theta : syn.true_weights.thetas)
        s_set.push_back(sample_covariance(theta));
    const Hyperparams h{1.0, 0.01, state.range(2) ? 0.1 : 0.0};
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_omega_step(s_set, h));
}
BENCHMARK(BM_OmegaStep)->Args({7, 15, 1})->Args({7, 15, 0})->Args({2, 25, 1})->Unit(benchmark::kMillisecond);

void BM_FitHmtl(benchmark::State& state) {
    const auto syn = dataset(state.range(0), 15, 50, 30);
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_hmtl(syn.data, {10.0, 0.1, 1.0}));
}
BENCHMARK(BM_FitHmtl)->Arg(2)->Arg(7)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
