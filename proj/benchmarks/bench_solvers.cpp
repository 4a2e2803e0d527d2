#include "kglab/evolution.hpp"
#include "kglab/factorization.hpp"
#include "kglab/inverses.hpp"
#include "kglab/source.hpp"

#include <benchmark/benchmark.h>

using namespace kglab;

namespace {

struct Problem {
    GridPtr grid = make_grid(32, 16.0);
    TimeGridPtr times = make_time_grid(16.0, 161);
    OperatorFamily family;
    Problem() : family(assemble_A(grid, times, 1.0, spec())) {}
    static PerturbationSpec spec()
    {
        PerturbationSpec s;
        s.sigma = 1.5;
        s.taper_radius = 9.6;
        return s;
    }
};

void BM_Factorize(benchmark::State& state)
{
    const Problem p;
    FactorOptions o;
    o.method = static_cast<FactorMethod>(state.range(0));
    o.floor = 0.5;
    state.SetLabel(std::string(to_string(o.method)));
    for (auto _ : state) benchmark::DoNotOptimize(construct_B(p.family, o));
}
BENCHMARK(BM_Factorize)
    ->Arg(static_cast<int>(FactorMethod::Adiabatic))
    ->Arg(static_cast<int>(FactorMethod::Iterate))
    ->Arg(static_cast<int>(FactorMethod::Riccati))
    ->Unit(benchmark::kMillisecond);

void BM_CauchySweep(benchmark::State& state)
{
    const Problem p;
    GridFunction u(32);
    for (int l = 0; l < 32; ++l) u[l] = std::exp(-0.25 * p.grid->point(l) * p.grid->point(l));
    const CauchyDatum psi{u, cd(0.0, 1.0) * u};
    const StepperSpec spec{.tol = std::pow(10.0, -static_cast<double>(state.range(0)))};
    for (auto _ : state) benchmark::DoNotOptimize(cauchy_sweep(p.family, psi, 0, spec));
}
BENCHMARK(BM_CauchySweep)->Arg(6)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state)
{
    const Problem p;
    FactorOptions o;
    o.floor = 0.5;
    const SolverContext ctx(p.family, construct_B(p.family, o));
    const Source src = Source::gaussian(p.grid, 0.0, 0.0, 1.0, 1.0);
    const ModeSource f = [src](double t) { return src.modes(t); };
    const auto method = static_cast<SolveMethod>(state.range(0));
    state.SetLabel(std::string(to_string(method)));
    for (auto _ : state) {
        if (method == SolveMethod::Feynman)
            benchmark::DoNotOptimize(feynman_solve(ctx, f, SolveOptions{}));
        else
            benchmark::DoNotOptimize(retarded_solve(ctx, f, SolveOptions{}));
    }
}
BENCHMARK(BM_Solve)
    ->Arg(static_cast<int>(SolveMethod::Feynman))
    ->Arg(static_cast<int>(SolveMethod::Retarded))
    ->Unit(benchmark::kMillisecond);

} // namespace
