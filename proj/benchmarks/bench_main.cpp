#include <benchmark/benchmark.h>

#include <vector>

#include "abplan/allocation.hpp"
#include "abplan/decisions.hpp"
#include "abplan/math/quadrature.hpp"
#include "abplan/production.hpp"

using namespace abplan;

namespace {

ProductionHandle handle_linear() {
    return ProductionHandle{Prior(GaussianPrior(-0.5, 1.0)), NoiseModel(2.0),
                            Utility::linear(), CostModel{}};
}

ProductionHandle handle_loss_averse() {
    return ProductionHandle{Prior(GaussianPrior(-0.5, 1.0)), NoiseModel(2.0),
                            Utility::loss_averse(3.0), CostModel{}};
}

}  // namespace

static void BM_ProductionClosedForm(benchmark::State& state) {
    const ProductionHandle h = handle_linear();
    double n = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(h.value(n));
        n = n < 1e8 ? n * 1.1 : 1.0;
    }
}
BENCHMARK(BM_ProductionClosedForm);

static void BM_ProductionGenericQuadrature(benchmark::State& state) {
    const ProductionHandle h = handle_loss_averse();
    for (auto _ : state) {
        benchmark::DoNotOptimize(production_generic(h, 1000.0).value);
    }
}
BENCHMARK(BM_ProductionGenericQuadrature);

static void BM_ThresholdBisection(benchmark::State& state) {
    const ProductionHandle h = handle_loss_averse();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            optimal_threshold_generic(h.prior, h.noise, 100, h.utility));
    }
}
BENCHMARK(BM_ThresholdBisection);

static void BM_SolveDp(benchmark::State& state) {
    const std::int64_t blocks = state.range(0);
    std::vector<double> grid(static_cast<std::size_t>(blocks) + 1);
    const ProductionHandle h = handle_linear();
    for (std::int64_t j = 0; j <= blocks; ++j) {
        grid[static_cast<std::size_t>(j)] = h.value(static_cast<double>(j));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_dp_table(grid, 16, 1).value);
    }
    state.SetComplexityN(blocks);
}
BENCHMARK(BM_SolveDp)->Arg(256)->Arg(1024)->Arg(4096)->Complexity(benchmark::oNSquared);

static void BM_GaussHermiteRule(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(math::gauss_hermite(static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_GaussHermiteRule)->Arg(64)->Arg(128);

static void BM_ProductionMonteCarlo(benchmark::State& state) {
    const ProductionHandle h = handle_linear();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            production_monte_carlo(h, 100, DecisionRule::optimal(), 100000, 7));
    }
}
BENCHMARK(BM_ProductionMonteCarlo);

static void BM_MinimaxRisk(benchmark::State& state) {
    std::vector<std::int64_t> allocations(64, 1000);
    const NoiseModel noise(1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(minimax_risk(allocations, noise));
    }
}
BENCHMARK(BM_MinimaxRisk);

BENCHMARK_MAIN();
