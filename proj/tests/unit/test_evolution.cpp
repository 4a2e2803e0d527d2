#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kglab/error.hpp"
#include "kglab/evolution.hpp"
#include "kglab/free_theory.hpp"
#include "support.hpp"

using namespace kglab;
using namespace kgtest;

namespace {

struct Setup {
    GridPtr grid = make_grid(16, 8.0);
    TimeGridPtr times = make_time_grid(20.0, 201);
    PerturbationSpec spec;
    Setup()
    {
        spec.sigma = 1.0;
        spec.taper_radius = 5.0;
    }
    OperatorFamily family(bool free = false) const
    {
        PerturbationSpec s = spec;
        if (free) s.c_V = s.c_b = 0.0;
        return assemble_A(grid, times, 1.0, s);
    }
};

// Stacked (u; v) mode block of free_evolution.
Eigen::MatrixXcd free_block(const FreePack& pack, double t)
{
    const int n = pack.grid->size();
    const BlockMultiplier e = free_evolution(pack, t);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n).diagonal() = e.a;
    m.topRightCorner(n, n).diagonal() = e.b;
    m.bottomLeftCorner(n, n).diagonal() = e.c;
    m.bottomRightCorner(n, n).diagonal() = e.d;
    return m;
}

double datum_rel(const CauchyDatum& a, const CauchyDatum& b)
{
    return std::sqrt((a.u - b.u).squaredNorm() + (a.v - b.v).squaredNorm()) /
           std::sqrt(b.u.squaredNorm() + b.v.squaredNorm());
}

} // namespace

TEST_CASE("free Cauchy evolution against the closed form")
{
    const Setup s;
    const OperatorFamily fam = s.family(true);
    const FreePack pack = build_free(s.grid, 1.0);
    std::mt19937_64 rng(41);
    const CauchyDatum psi{random_vector(16, rng), random_vector(16, rng)};
    const StepperSpec spec{.tol = 1e-9};
    EvolutionInfo info;
    const CauchyDatum out = evolve_cauchy(fam, psi, -20.0, 20.0, spec, &info);
    CHECK(datum_rel(out, free_evolution(pack, 40.0).apply(*s.grid, psi)) <= spec.tol);
    CHECK(info.error_estimate <= spec.tol);
    const CauchyDatum same = evolve_cauchy(fam, psi, 3.0, 3.0, spec);
    CHECK(datum_rel(same, psi) < 1e-14);
}

TEST_CASE("frozen perturbed generator against its eigendecomposition")
{
    const Setup s;
    const OperatorFamily fam = s.family();
    const Eigen::MatrixXcd a = fam.mode_matrix(0.0);
    const int n = 16;
    const Rhs f = [&](double, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
        dy.resize(y.rows(), y.cols());
        dy.topRows(n) = cd(0.0, 1.0) * y.bottomRows(n);
        dy.bottomRows(n) = cd(0.0, 1.0) * (a * y.topRows(n));
    };
    std::mt19937_64 rng(42);
    Eigen::MatrixXcd y0(2 * n, 1);
    y0.col(0) << random_vector(n, rng), random_vector(n, rng);
    const double t = 6.0;
    const StepperSpec spec{.tol = 1e-9};
    const Eigen::MatrixXcd y = integrate_controlled(f, y0, 0.0, t, spec);

    // u'' = -A u with v = -i u': u = cos(W t) u0 + i W^{-1} sin(W t) v0, W = sqrt(A).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
    const Eigen::MatrixXcd& V = es.eigenvectors();
    const Eigen::VectorXd w = es.eigenvalues().cwiseSqrt();
    Eigen::VectorXcd c(n), sn(n);
    for (int i = 0; i < n; ++i) c[i] = std::cos(w[i] * t), sn[i] = std::sin(w[i] * t);
    const Eigen::VectorXcd u0 = V.adjoint() * y0.col(0).head(n), v0 = V.adjoint() * y0.col(0).tail(n);
    const cd I(0.0, 1.0);
    const Eigen::VectorXcd u = V * (c.cwiseProduct(u0) + I * sn.cwiseQuotient(w.cast<cd>()).cwiseProduct(v0));
    const Eigen::VectorXcd v = V * (I * sn.cwiseProduct(w.cast<cd>()).cwiseProduct(u0) + c.cwiseProduct(v0));
    Eigen::VectorXcd expect(2 * n);
    expect << u, v;
    CHECK(rel(y.col(0), expect) <= spec.tol);
}

TEST_CASE("perturbed Cauchy evolution is two-sided")
{
    const Setup s;
    const OperatorFamily fam = s.family();
    std::mt19937_64 rng(43);
    const CauchyDatum psi{random_vector(16, rng), random_vector(16, rng)};
    const StepperSpec spec{.tol = 1e-9};
    const CauchyDatum there = evolve_cauchy(fam, psi, -10.0, 12.0, spec);
    const CauchyDatum back = evolve_cauchy(fam, there, 12.0, -10.0, spec);
    CHECK(datum_rel(back, psi) <= 10 * spec.tol);
}

TEST_CASE("diagonal evolution")
{
    const Setup s;
    const FactorizationResult f0 = construct_B(s.family(true), {.method = FactorMethod::Adiabatic, .floor = 0.5});
    const DiagonalGenerator free_gen = diagonal_generator(f0);
    const FreePack pack = build_free(s.grid, 1.0);
    std::mt19937_64 rng(44);
    const DiagonalDatum phi{random_vector(16, rng), GridFunction::Zero(16)};
    const StepperSpec spec{.tol = 1e-9};
    const DiagonalDatum out = evolve_diag(free_gen, *s.grid, phi, -4.0, 5.0, spec);
    Eigen::VectorXcd expect = s.grid->to_modes(phi.p);
    for (int i = 0; i < 16; ++i) expect[i] *= std::polar(1.0, 9.0 * pack.omega[i]);
    CHECK(rel(s.grid->to_modes(out.p), expect) <= spec.tol);
    // Component 2 started at zero and never receives anything from component 1.
    CHECK(out.q.norm() == 0.0);

    // Hermitian (adiabatic) B generates a unitary flow.
    const FactorizationResult fa = construct_B(s.family(), {.method = FactorMethod::Adiabatic, .floor = 0.5});
    const DiagonalDatum o2 = evolve_diag(diagonal_generator(fa), *s.grid, phi, -15.0, 15.0, spec);
    CHECK(std::abs(o2.p.norm() - phi.p.norm()) <= 10 * spec.tol * phi.p.norm());
}

TEST_CASE("propagator matrices")
{
    const Setup s;
    const OperatorFamily free = s.family(true);
    const FreePack pack = build_free(s.grid, 1.0);
    const StepperSpec spec{.tol = 1e-9};
    const BlockEvolver ev = cauchy_evolver(free, spec);
    CHECK(rel(propagator_matrix(ev, 32, 2.0, 2.0), Eigen::MatrixXcd::Identity(32, 32)) == 0.0);
    CHECK(rel(propagator_matrix(ev, 32, -3.0, 4.0), free_block(pack, 7.0)) <= spec.tol);

    const OperatorFamily fam = s.family();
    const BlockEvolver pe = cauchy_evolver(fam, spec);
    const Eigen::MatrixXcd u_ts = propagator_matrix(pe, 32, -5.0, 5.0);
    const Eigen::MatrixXcd composed = propagator_matrix(pe, 32, 0.0, 5.0) * propagator_matrix(pe, 32, -5.0, 0.0);
    CHECK(rel(composed, u_ts) <= 100 * spec.tol);

    CHECK_THROWS_AS(propagator_matrix(pe, 2 * 257, 0.0, 1.0), Error);
}

TEST_CASE("fourth-order convergence of the fixed-step integrator")
{
    const Setup s;
    const OperatorFamily free = s.family(true);
    const FreePack pack = build_free(s.grid, 1.0);
    Eigen::MatrixXcd y0 = Eigen::MatrixXcd::Zero(32, 1);
    y0(1, 0) = 1.0;
    y0(17, 0) = pack.omega[1] * 0.5;
    const Eigen::MatrixXcd exact = free_block(pack, 4.0) * y0;
    const Rhs f = cauchy_rhs(free);
    auto err = [&](int steps) {
        Eigen::MatrixXcd y = y0;
        Rk4 rk;
        rk.run(f, 0.0, 4.0, steps, y);
        return (y - exact).norm();
    };
    CHECK(err(40) / err(80) >= std::pow(2.0, 3.5));
    CHECK(err(80) / err(160) >= std::pow(2.0, 3.5));
}

TEST_CASE("stepper specification")
{
    CHECK_NOTHROW(validate(StepperSpec{}));
    CHECK_THROWS_AS(validate(StepperSpec{.order = 2}), Error);
    CHECK_THROWS_AS(validate(StepperSpec{.tol = -1.0}), Error);
}
