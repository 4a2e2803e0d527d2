#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kglab/absorption.hpp"
#include "kglab/bvp.hpp"
#include "kglab/error.hpp"
#include "kglab/inverses.hpp"
#include "kglab/source.hpp"
#include "support.hpp"

#include <Eigen/SVD>

using namespace kglab;
using namespace kgtest;

namespace {

struct Setup {
    GridPtr grid = make_grid(32, 16.0);
    TimeGridPtr times;
    PerturbationSpec spec;
    explicit Setup(int J = 161) : times(make_time_grid(16.0, J))
    {
        spec.sigma = 1.5;
        spec.taper_radius = 9.6;
    }
    OperatorFamily family(bool free = false) const
    {
        PerturbationSpec s = spec;
        if (free) s.c_V = s.c_b = 0.0;
        return assemble_A(grid, times, 1.0, s);
    }
    SolverContext context(bool free = false, FactorMethod m = FactorMethod::Adiabatic) const
    {
        const OperatorFamily fam = family(free);
        FactorOptions o;
        o.method = m;
        o.floor = 0.5;
        return SolverContext(fam, construct_B(fam, o));
    }
};

ModeSource modes_of(const Source& s)
{
    return [s](double t) { return s.modes(t); };
}

// sup_j ||a_j - b_j|| / sup_j ||b_j|| over nodes with |t| <= window.
double sup_rel(const SpaceTimeField& a, const SpaceTimeField& b, double window)
{
    double num = 0.0, den = 0.0;
    for (int j = 0; j < a.size(); ++j) {
        if (std::abs(a.times().node(j)) > window + 1e-12) continue;
        num = std::max(num, (a[j] - b[j]).norm());
        den = std::max(den, b[j].norm());
    }
    return num / den;
}

const SolveOptions kOpts{};

} // namespace

TEST_CASE("diagonal Feynman application")
{
    const Setup s;
    const SolverContext free = s.context(true);
    const StepperSpec spec{.tol = 1e-10};
    const int n = 32;

    SUBCASE("zero source")
    {
        const DiagonalModes z = feynman_apply_diag(free, DiagonalSource{}, spec);
        for (int j = 0; j < s.times->size(); ++j) CHECK(z.p[j].norm() + z.q[j].norm() == 0.0);
    }
    SUBCASE("sweep form against the kernel form in the free case")
    {
        const Source src = Source::gaussian(s.grid, 0.5, -1.0, 1.0, 1.5);
        const ModeSource g = [&](double t) { return Eigen::VectorXcd(-src.modes(t)); };
        const DiagonalModes w = feynman_apply_diag(free, DiagonalSource{g, g, {}}, spec);
        const FreePack& pack = free.free_pack();
        const CauchyTrajectory k = free_diag_feynman_apply(pack, s.times, [&](double t) {
            return CauchyDatum{GridFunction::Zero(n), GridFunction(-src(t))};
        });
        double num = 0.0, den = 0.0;
        for (int j = 0; j < s.times->size(); ++j) {
            Eigen::VectorXcd u, v;
            free.transform().inverse_modes(j, w.p[j], w.q[j], u, v);
            num = std::max(num, (u - s.grid->to_modes(k.u[j])).norm());
            den = std::max(den, u.norm());
        }
        CHECK(num / den <= 1e-7);
    }
    SUBCASE("impulse in component 1 propagates forward only")
    {
        const SolverContext ctx = s.context();
        std::mt19937_64 rng(51);
        const int j0 = 60;
        const Eigen::VectorXcd g = random_vector(n, rng);
        const DiagonalModes w = feynman_apply_diag(ctx, DiagonalSource{{}, {}, {DiagonalImpulse{j0, g, {}}}}, spec);
        for (int j = 0; j < j0; ++j) CHECK(w.p[j].norm() == 0.0);
        for (int j = 0; j < s.times->size(); ++j) CHECK(w.q[j].norm() == 0.0);
        const BlockEvolver ev = diagonal_evolver(ctx.generator(), spec);
        for (int j : {j0 + 1, j0 + 30, 160}) {
            Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(2 * n, 1);
            y.col(0).head(n) = cd(0.0, 1.0) * g;
            const Eigen::MatrixXcd out = ev(y, s.times->node(j0), s.times->node(j));
            CHECK(rel(w.p[j], out.col(0).head(n)) <= 1e-8);
        }
    }
}

TEST_CASE("Feynman solves")
{
    // The residual is limited by the time step (fourth order); J = 641 puts it below tol.
    const Setup s(641);
    const Source src = Source::gaussian(s.grid, 0.0, 0.0, 1.0, 1.0);
    SUBCASE("free case converges at once")
    {
        const SolveReport r = feynman_solve(s.context(true), modes_of(src), kOpts);
        CHECK(r.converged);
        CHECK(r.iterations == 1);
        CHECK(r.residual.relative <= 1e-7);
    }
    SUBCASE("adiabatic factorization contracts")
    {
        const SolveReport r = feynman_solve(s.context(), modes_of(src), kOpts);
        CHECK(r.converged);
        CHECK(r.iterations <= 8);
        CHECK(r.contraction <= 0.5);
        CHECK(r.residual.relative <= kOpts.tol);
    }
    SUBCASE("riccati factorization needs a single sweep")
    {
        const SolveReport r = feynman_solve(s.context(false, FactorMethod::Riccati), modes_of(src), kOpts);
        CHECK(r.converged);
        CHECK(r.iterations == 1);
    }
}

TEST_CASE("Feynman residual floor is fourth order in the time step")
{
    double res[2];
    for (int i = 0; i < 2; ++i) {
        const Setup s(i == 0 ? 161 : 321);
        const Source src = Source::gaussian(s.grid, 0.0, 0.0, 1.0, 1.0);
        res[i] = feynman_solve(s.context(), modes_of(src), kOpts).residual.relative;
    }
    CAPTURE(res[0]);
    CAPTURE(res[1]);
    CHECK(res[0] / res[1] >= 8.0);
}

TEST_CASE("causal inverses")
{
    const Setup s;
    const SolverContext ctx = s.context();
    SUBCASE("retarded solution vanishes before the source")
    {
        // The bump's time factor is below e^-50 for t <= 2.
        const double wt = 0.3, t0 = 2.0 + std::sqrt(100.0) * wt;
        const Source src = Source::gaussian(s.grid, t0, 0.0, wt, 1.0);
        REQUIRE(src.envelope(1.9) == 0.0);
        const SolveReport r = retarded_solve(ctx, modes_of(src), kOpts);
        CHECK(r.converged);
        double early = 0.0, all = 0.0;
        for (int j = 0; j < s.times->size(); ++j) {
            all = std::max(all, r.solution.u[j].norm());
            if (s.times->node(j) <= 1.9) early = std::max(early, r.solution.u[j].norm());
        }
        CHECK(early <= 1e-8 * all);
    }
    SUBCASE("advanced is the time mirror of retarded")
    {
        const Source late = Source::gaussian(s.grid, 3.0, 1.0, 1.0, 1.0);
        const Source early = Source::gaussian(s.grid, -3.0, 1.0, 1.0, 1.0);
        const SolveReport ret = retarded_solve(ctx, modes_of(late), kOpts);
        const SolveReport adv = advanced_solve(ctx, modes_of(early), kOpts);
        const int J = s.times->size();
        double num = 0.0, den = 0.0;
        for (int j = 0; j < J; ++j) {
            num = std::max(num, (adv.solution.u[j] - ret.solution.u[J - 1 - j]).norm());
            den = std::max(den, ret.solution.u[j].norm());
        }
        CHECK(num / den <= 1e-5);
    }
    SUBCASE("retarded minus advanced is a homogeneous solution")
    {
        const Setup fine(641);
        const SolverContext ctx = fine.context();
        const Source src = Source::gaussian(fine.grid, 0.0, 0.0, 1.0, 1.0);
        const ModeSource f = modes_of(src);
        const SolveReport ret = retarded_solve(ctx, f, kOpts);
        const SolveReport adv = advanced_solve(ctx, f, kOpts);
        std::vector<Eigen::VectorXcd> u, v;
        for (int j = 0; j < fine.times->size(); ++j) {
            u.push_back(fine.grid->to_modes(Eigen::VectorXcd(ret.solution.u[j] - adv.solution.u[j])));
            v.push_back(fine.grid->to_modes(Eigen::VectorXcd(ret.solution.v[j] - adv.solution.v[j])));
        }
        const int m = static_cast<int>(std::ceil(fine.times->step() / kOpts.check_step));
        const ResidualReport rr = residual_check(ctx.family(), u, v, [](double) { return Eigen::VectorXcd::Zero(32).eval(); }, kOpts.gamma, kOpts.s, m);
        CHECK(rr.absolute / ret.residual.source_norm <= 2 * kOpts.tol);
    }
    SUBCASE("Feynman and retarded solutions differ")
    {
        const Source src = Source::gaussian(s.grid, 0.0, 0.0, 1.0, 1.0);
        const SolveReport fe = feynman_solve(ctx, modes_of(src), kOpts);
        const SolveReport re = retarded_solve(ctx, modes_of(src), kOpts);
        CHECK(sup_rel(re.solution.u, fe.solution.u, 1e9) >= 1e-2);
    }
}

TEST_CASE("boundary-value solver")
{
    const Setup s;
    const BvpOptions bo{};
    SUBCASE("free case reproduces the kernel convolution")
    {
        const OperatorFamily free = s.family(true);
        const BvpSolver bvp(free, bo);
        const Source src = Source::gaussian(s.grid, 1.0, 0.0, 1.0, 1.0);
        const SolveReport r = bvp.solve(modes_of(src));
        const CauchyTrajectory k = free_diag_feynman_apply(build_free(s.grid, 1.0), s.times, [&](double t) {
            return CauchyDatum{GridFunction::Zero(32), GridFunction(-src(t))};
        });
        CHECK(sup_rel(r.solution.u, k.u, 1e9) <= 1e-6);
    }
    SUBCASE("perturbed case agrees with the Feynman solve and the rows hold")
    {
        const SolverContext ctx = s.context();
        const BvpSolver bvp(ctx.family(), bo);
        for (std::uint64_t seed : {1u, 2u}) {
            const Source src = Source::random_admissible(s.grid, 16.0, seed);
            const SolveReport fe = feynman_solve(ctx, modes_of(src), kOpts);
            const SolveReport bv = bvp.solve(modes_of(src));
            CHECK(bv.residual.relative <= 1e-5);
            CHECK(std::max(bv.defects.at_plus, bv.defects.at_minus) <= 1e-3);
            CHECK(sup_rel(bv.solution.u, fe.solution.u, 8.0) <= 1e-4);
        }
        const SolveReport z = bvp.solve([](double) { return Eigen::VectorXcd::Zero(32).eval(); });
        for (int j = 0; j < s.times->size(); ++j) CHECK(z.solution.u[j].norm() + z.solution.v[j].norm() == 0.0);
    }
    SUBCASE("flipped rows give a different inverse")
    {
        const OperatorFamily fam = s.family();
        BvpOptions flip = bo;
        flip.flipped = true;
        const BvpSolver feyn(fam, bo), anti(fam, flip);
        const Source src = Source::gaussian(s.grid, 0.0, 0.0, 1.0, 1.0);
        const SolveReport a = anti.solve(modes_of(src));
        const SolveReport b = feyn.solve(modes_of(src));
        CHECK(a.residual.relative <= 1e-5);
        CHECK(sup_rel(a.solution.u, b.solution.u, 1e9) >= 1e-2);
    }
}

TEST_CASE("injectivity of the discretized boundary-value problem")
{
    PerturbationSpec spec;
    spec.sigma = 1.0;
    SUBCASE("sparse estimate against a dense SVD")
    {
        const auto grid = make_grid(8, 6.0);
        const auto times = make_time_grid(4.0, 21);
        PerturbationSpec s = spec;
        s.taper_radius = 3.6;
        for (bool free : {true, false}) {
            PerturbationSpec t = s;
            if (free) t.c_V = t.c_b = 0.0;
            const auto m = bvp_system_matrix(assemble_A(grid, times, 1.0, t));
            const Eigen::MatrixXcd dense(m);
            const double oracle = Eigen::JacobiSVD<Eigen::MatrixXcd>(dense).singularValues().minCoeff();
            const double est = sigma_min_sparse(m);
            CHECK(oracle > 0.0);
            CHECK(std::abs(est - oracle) <= 1e-6 * oracle);
        }
    }
    SUBCASE("smallest singular value stays bounded under refinement")
    {
        const std::vector<InjectivityGrid> grids{{16, 8.0, 8.0, 51}, {16, 8.0, 8.0, 101}};
        const InjectivityReport pert = bvp_injectivity(1.0, spec, grids);
        const InjectivityReport free = bvp_injectivity(1.0, spec, grids, true);
        CHECK(pert.finest_ratio >= 0.5);
        for (std::size_t i = 0; i < grids.size(); ++i) {
            CHECK(free.levels[i].sigma_min > 0.0);
            CHECK(pert.levels[i].sigma_min >= 0.5 * free.levels[i].sigma_min);
            CHECK(pert.levels[i].sigma_min <= 2.0 * free.levels[i].sigma_min);
        }
    }
}

TEST_CASE("limiting absorption on Minkowski modes")
{
    for (double t : {-3.0, 0.0, 0.7, 5.0}) {
        double est = 0.0;
        const cd q = absorption_kernel(1.2, 0.05, t, AbsorptionSign::Feynman, &est);
        CHECK(std::abs(q - absorption_kernel_exact(1.2, 0.05, t)) <= 1e-8);
    }
    const AbsorptionTable tab = minkowski_absorption_check(1.0, 0.0, {0.1, 0.05, 0.025, 0.0125});
    CHECK(tab.rows.front().error <= 0.2);
    CHECK(tab.max_ratio <= 0.7);
    for (const auto& r : tab.rows) {
        CHECK(r.sign_match);
        CHECK(r.error < r.opposite_error);
        CHECK(std::abs(r.g0.imag()) > 0.0);
    }
}

TEST_CASE("option validation and names")
{
    CHECK_NOTHROW(validate(SolveOptions{}));
    CHECK_THROWS_AS(validate(SolveOptions{.tol = 0.0}), Error);
    CHECK_THROWS_AS(validate(SolveOptions{.k_max = 0}), Error);
    for (SolveMethod m : {SolveMethod::Feynman, SolveMethod::Retarded, SolveMethod::Advanced, SolveMethod::Bvp})
        CHECK(parse_solve_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_solve_method("causal"), Error);
    CHECK(parse_feynman_boundary("diagonal") == FeynmanBoundary::Diagonal);
}

TEST_CASE("source envelope")
{
    const auto grid = make_grid(32, 16.0);
    const Source src = Source::random_admissible(grid, 40.0, 3);
    for (double t : {-12.0, -3.0, 0.0, 2.5, 9.0}) CHECK(src(t).cwiseAbs().maxCoeff() <= src.envelope(t) * (1 + 1e-12));
    // Admissible bumps sit in |t0| <= T/4 with widths <= 1.5, so the ends are quiet.
    CHECK(src.envelope(-26.0) == 0.0);
    CHECK(src.envelope(26.0) == 0.0);
    CHECK(src(26.0).norm() == 0.0);
    const Source g = Source::gaussian(grid, 0.0, 0.0, 1.0, 1.0);
    CHECK(g.envelope(0.0) == 1.0);
    CHECK(g.envelope(9.9) > 0.0);
    CHECK(g.envelope(10.1) == 0.0);
}
