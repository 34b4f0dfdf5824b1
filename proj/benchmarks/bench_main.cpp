#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "mfgc/coupler.hpp"
#include "mfgc/mufix.hpp"
#include "mfgc/pde.hpp"

using namespace mfgc;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ScalarField bump_density(const TorusGrid& g) {
    ScalarField m = ScalarField::sample(g, [](double x) { return 1.0 + 0.5 * std::cos(kTwoPi * x); });
    const double mass = integrate(m);
    for (double& v : m) v /= mass;
    return m;
}

Model linear_demand(const TorusGrid& g) {
    TerminalCost term;
    term.g0.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) term.g0[i] = 0.2 * std::cos(kTwoPi * g.node(i));
    return Model(g, LinearDemand{1.0}, RunningCost{}, term);
}

} // namespace

static void BM_PeriodicTridiag(benchmark::State& state) {
    const TorusGrid g(static_cast<std::size_t>(state.range(0)));
    const ScalarField rhs = ScalarField::sample(g, [](double x) { return std::sin(kTwoPi * x); });
    for (auto _ : state) benchmark::DoNotOptimize(periodic_tridiag_solve(3.0, -1.0, rhs));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PeriodicTridiag)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oN);

static void BM_HjbStep(benchmark::State& state) {
    const TorusGrid g(static_cast<std::size_t>(state.range(0)));
    const Model model = linear_demand(g);
    const ScalarField u = ScalarField::sample(g, [](double x) { return 0.2 * std::cos(kTwoPi * x); });
    const Aggregates agg{MeanControl{0.3}, {}};
    for (auto _ : state) benchmark::DoNotOptimize(hjb_step_backward(u, agg, model, SchemeConfig{}, 1e-3));
}
BENCHMARK(BM_HjbStep)->Arg(128)->Arg(1024);

static void BM_FpkStep(benchmark::State& state) {
    const TorusGrid g(static_cast<std::size_t>(state.range(0)));
    const ScalarField m = bump_density(g);
    const ControlField b = ControlField::sample(g, [](double x) { return 0.3 * std::sin(kTwoPi * x); });
    for (auto _ : state) benchmark::DoNotOptimize(fpk_step_forward(m, b, SchemeConfig{}, 1e-3));
}
BENCHMARK(BM_FpkStep)->Arg(128)->Arg(1024);

static void BM_CrowdSolveMu(benchmark::State& state) {
    const TorusGrid g(static_cast<std::size_t>(state.range(0)));
    const Model model(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)});
    const ScalarField p = ScalarField::sample(g, [](double x) { return std::sin(kTwoPi * x); });
    const ScalarField m = bump_density(g);
    for (auto _ : state) benchmark::DoNotOptimize(solve_mu(model, p, m));
}
BENCHMARK(BM_CrowdSolveMu)->Arg(64)->Arg(128);

static void BM_CoupledSolve(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const TorusGrid g(n);
    const Model model = linear_demand(g);
    const ScalarField m0 = bump_density(g);
    for (auto _ : state) benchmark::DoNotOptimize(solve(model, TimeGrid(1.0, 2 * n), m0, SolverConfig{}));
}
BENCHMARK(BM_CoupledSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
