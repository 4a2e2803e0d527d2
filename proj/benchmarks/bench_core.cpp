#include "kglab/grid.hpp"
#include "kglab/model.hpp"
#include "kglab/spatial_operator.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace kglab;

namespace {

Eigen::VectorXcd noise(int n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    Eigen::VectorXcd v(n);
    for (auto& x : v) x = {d(rng), d(rng)};
    return v;
}

void BM_ToModes(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const GridPtr grid = make_grid(n, 40.0);
    const Eigen::VectorXcd u = noise(n, 1);
    for (auto _ : state) benchmark::DoNotOptimize(grid->to_modes(u));
    state.SetComplexityN(n);
}
BENCHMARK(BM_ToModes)->RangeMultiplier(2)->Range(32, 1024)->Complexity(benchmark::oNLogN);

void BM_AssembleFamily(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const GridPtr grid = make_grid(n, 40.0);
    const TimeGridPtr times = make_time_grid(40.0, 201);
    PerturbationSpec spec;
    spec.taper_radius = 24.0;
    for (auto _ : state) benchmark::DoNotOptimize(assemble_A(grid, times, 1.0, spec));
}
BENCHMARK(BM_AssembleFamily)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

// Square root of A(0) on the default grid, the inner kernel of the adiabatic factorization.
void BM_DenseSqrt(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const GridPtr grid = make_grid(n, 40.0);
    const TimeGridPtr times = make_time_grid(40.0, 3);
    PerturbationSpec spec;
    spec.taper_radius = 24.0;
    const SpatialOperator a = assemble_A(grid, times, 1.0, spec).sample(1);
    for (auto _ : state) benchmark::DoNotOptimize(principal_sqrt(a));
}
BENCHMARK(BM_DenseSqrt)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

} // namespace
