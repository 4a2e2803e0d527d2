#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kglab/analysis.hpp"
#include "kglab/error.hpp"
#include "kglab/evolution.hpp"
#include "kglab/fit.hpp"
#include "kglab/model.hpp"
#include "support.hpp"

using namespace kglab;
using namespace kgtest;

namespace {

CauchyTrajectory constant_trajectory(const TimeGridPtr& times, const GridFunction& u, const GridFunction& v)
{
    const std::vector<GridFunction> us(times->size(), u), vs(times->size(), v);
    return {SpaceTimeField(times, us), SpaceTimeField(times, vs)};
}

} // namespace

TEST_CASE("charge")
{
    const auto grid = make_grid(16, 4.0);
    const auto times = make_time_grid(1.0, 3);
    std::mt19937_64 rng(3);
    SUBCASE("real field with real velocity carries no charge")
    {
        const GridFunction u = random_vector(16, rng).real().cast<cd>();
        const GridFunction v = cd(0.0, -1.0) * random_vector(16, rng).real().cast<cd>();
        for (double j : kg_charge(*grid, constant_trajectory(times, u, v))) CHECK(std::abs(j) <= 1e-15);
    }
    SUBCASE("plane wave")
    {
        const double k = wavenumber(3, 16, 4.0), omega = std::sqrt(k * k + 1.0);
        GridFunction u(16);
        for (int l = 0; l < 16; ++l) u[l] = std::exp(cd(0.0, k * grid->point(l)));
        const GridFunction v = omega * u;
        for (double j : kg_charge(*grid, constant_trajectory(times, u, v))) CHECK(j == doctest::Approx(omega * 8.0).epsilon(1e-13));
    }
    SUBCASE("drift")
    {
        const std::vector<GridFunction> vals{GridFunction::Constant(16, 1.0), GridFunction::Constant(16, 1.0),
                                             GridFunction::Constant(16, 1.0)};
        std::vector<GridFunction> vs = vals;
        vs[2] *= 1.5;
        const CauchyTrajectory psi{SpaceTimeField(times, vals), SpaceTimeField(times, vs)};
        const ChargeReport r = charge_drift(*grid, psi, 1e-3);
        CHECK(r.reference == doctest::Approx(8.0));
        CHECK(r.drift == doctest::Approx(4.0));
        CHECK(r.bound == doctest::Approx(0.9));
        CHECK_FALSE(r.pass);
        CHECK(charge_drift(*grid, psi, 1e-3, 0, 1).pass);
        CHECK_THROWS_AS(charge_drift(*grid, psi, 1e-3, 2, 1), Error);
    }
    SUBCASE("conserved along the perturbed flow")
    {
        const auto g = make_grid(32, 16.0);
        const auto t = make_time_grid(12.0, 121);
        PerturbationSpec spec;
        spec.sigma = 1.5;
        spec.taper_radius = 9.6;
        const OperatorFamily fam = assemble_A(g, t, 1.0, spec);
        GridFunction u(32), v(32);
        for (int l = 0; l < 32; ++l) {
            const double x = g->point(l);
            u[l] = std::exp(-x * x / 4.0) * std::exp(cd(0.0, 0.5 * x));
            v[l] = cd(0.3, 1.0) * u[l];
        }
        const double tol = 1e-9;
        const CauchySweep sw = cauchy_sweep(fam, {u, v}, 0, {.tol = tol});
        const ChargeReport r = charge_drift(*g, sw.trajectory, tol);
        CAPTURE(r.drift);
        CHECK(std::abs(r.reference) > 0.1);
        CHECK(r.pass);
    }
}

TEST_CASE("masses of a free positive-frequency solution")
{
    const auto grid = make_grid(32, 16.0);
    const auto times = make_time_grid(16.0, 161);
    PerturbationSpec spec;
    spec.c_V = spec.c_b = 0.0;
    const OperatorFamily fam = assemble_A(grid, times, 1.0, spec);
    FactorOptions fo;
    fo.floor = 0.5;
    const FactorizationResult F = construct_B(fam, fo);
    const Transform tr = build_transform(F);
    const FreePack pack = build_free(grid, 1.0);

    std::mt19937_64 rng(9);
    Eigen::VectorXcd m = random_vector(32, rng);
    for (int i = 0; i < 32; ++i) m[i] *= std::exp(-0.1 * std::abs(pack.omega[i]));
    const Eigen::VectorXcd vm = pack.omega.cast<cd>().cwiseProduct(m);
    const CauchySweep sw = cauchy_sweep(fam, {grid->from_modes(m), grid->from_modes(vm)}, 0, {.tol = 1e-10});
    const MassReport r = diag_masses(tr, pack, sw.trajectory);
    REQUIRE(r.q_plus.size() == 161);
    for (int j = 0; j < 161; ++j) {
        CHECK(r.q_minus[j] <= 1e-14 * r.q_plus[j]);
        CHECK(r.q_plus[j] == doctest::Approx(r.q_plus[0]).epsilon(1e-8));
        CHECK(r.energy[j] == doctest::Approx(r.energy[0]).epsilon(1e-8));
    }
    REQUIRE(r.fits.size() == 4);
    for (const auto& f : r.fits) {
        CHECK(f.t_min == doctest::Approx(4.0));
        CHECK(f.t_max == doctest::Approx(16.0));
        if (f.component == "q+") CHECK(f.constant == doctest::Approx(r.q_plus[0]).epsilon(1e-8));
    }

    const CauchyTrajectory shortened{SpaceTimeField(make_time_grid(1.0, 11), std::vector<GridFunction>(11, grid->from_modes(m))),
                                     SpaceTimeField(make_time_grid(1.0, 11), std::vector<GridFunction>(11, grid->from_modes(vm)))};
    CHECK_THROWS_AS(diag_masses(build_transform(construct_B(assemble_A(grid, make_time_grid(1.0, 11), 1.0, spec), fo)), pack, shortened),
                    Error);
}

TEST_CASE("bump")
{
    CHECK(bump(0.0) == 1.0);
    CHECK(bump(1.0) == 1.0);
    CHECK(bump(-1.0) == 1.0);
    CHECK(bump(2.0) == 0.0);
    CHECK(bump(3.0) == 0.0);
    CHECK(bump(1.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bump(0.7) == bump(-0.7));
    for (double s : {-1.8, -1.3, 1.1, 1.5, 1.9}) {
        const double h = 1e-5;
        CHECK(bump_derivative(s) == doctest::Approx((bump(s + h) - bump(s - h)) / (2 * h)).epsilon(1e-6));
    }
    CHECK(bump_derivative(0.5) == 0.0);
    CHECK(bump_derivative(2.5) == 0.0);
}

TEST_CASE("window identity")
{
    const auto times = make_time_grid(40.0, 801);
    MassReport m;
    m.t = times->nodes();
    SUBCASE("constant masses telescope to zero")
    {
        m.q_plus.assign(801, 3.0);
        m.q_minus.assign(801, 1.0);
        const WindowReport r = window_identity_check(*times, m, {0.1, 0.2, 0.4});
        for (const auto& row : r.rows) CHECK(row.S_raw <= 1e-10);
    }
    SUBCASE("the raw sum sees the jump between the ends; the offsets remove it")
    {
        for (double t : m.t) {
            m.q_plus.push_back(1.0 + std::tanh(t));
            m.q_minus.push_back(1.0);
        }
        m.fits.push_back({"q+", 1, 10.0, 40.0, 2.0, 0.0, -1.0, 0.0});
        m.fits.push_back({"q-", 1, 10.0, 40.0, 1.0, 0.0, -1.0, 0.0});
        m.fits.push_back({"q+", -1, 10.0, 40.0, 0.0, 0.0, -1.0, 0.0});
        m.fits.push_back({"q-", -1, 10.0, 40.0, 1.0, 0.0, -1.0, 0.0});
        const WindowReport r = window_identity_check(*times, m, {0.05, 0.1});
        for (const auto& row : r.rows) {
            CHECK(row.S_raw == doctest::Approx(2.0).epsilon(1e-6));
            CHECK(row.S <= 1e-6);
        }
    }
    SUBCASE("support must fit in the window")
    {
        m.q_plus.assign(801, 1.0);
        m.q_minus.assign(801, 0.0);
        CHECK_NOTHROW(window_identity_check(*times, m, {0.05}));
        CHECK_THROWS_AS(window_identity_check(*times, m, {0.04}), Error);
        CHECK_THROWS_AS(window_identity_check(*make_time_grid(40.0, 401), m, {0.1}), Error);
    }
}

TEST_CASE("frequency split")
{
    const auto grid = make_grid(16, 8.0);
    const FreePack pack = build_free(grid, 1.0);
    std::mt19937_64 rng(4);
    const Eigen::VectorXcd u = random_vector(16, rng);
    const Eigen::VectorXcd wu = pack.omega.cast<cd>().cwiseProduct(u);
    FrequencySplit s = frequency_split_modes(pack, u, wu);
    CHECK(s.plus == doctest::Approx(1.0));
    CHECK(s.minus <= 1e-30);
    s = frequency_split_modes(pack, u, -wu);
    CHECK(s.minus == doctest::Approx(1.0));
    s = frequency_split(pack, {grid->from_modes(u), grid->from_modes(Eigen::VectorXcd(-0.5 * wu))});
    // |1 - 1/2|^2 : |1 + 1/2|^2 = 1 : 9
    CHECK(s.plus == doctest::Approx(0.1));
    CHECK(s.plus + s.minus == doctest::Approx(1.0));
    const Eigen::VectorXcd v = random_vector(16, rng);
    s = frequency_split_modes(pack, u, v);
    CHECK(s.plus + s.minus == doctest::Approx(1.0));
    CHECK_THROWS_AS(frequency_split_modes(pack, Eigen::VectorXcd::Zero(16), Eigen::VectorXcd::Zero(16)), Error);
}

TEST_CASE("time-frequency sign")
{
    const double dt = 0.05, omega = 1.3;
    std::vector<cd> plus, minus;
    for (int k = 0; k < 2000; ++k) {
        plus.push_back(std::exp(cd(0.0, omega * k * dt)));
        minus.push_back(std::exp(cd(0.0, -omega * k * dt)));
    }
    CHECK(time_frequency_sign(plus, dt, omega) >= 0.99);
    CHECK(time_frequency_sign(minus, dt, omega) <= 0.01);
    std::vector<cd> mixed(2000);
    for (int k = 0; k < 2000; ++k) mixed[k] = plus[k] + 2.0 * minus[k];
    CHECK(time_frequency_sign(mixed, dt, omega) == doctest::Approx(0.2).epsilon(0.02));
    CHECK_THROWS_AS(time_frequency_sign(std::vector<cd>(plus.begin(), plus.begin() + 900), dt, omega), Error);
    CHECK_THROWS_AS(time_frequency_sign(std::vector<cd>(2000), dt, omega), Error);
}

TEST_CASE("convergence table")
{
    const std::vector<double> levels{0.4, 0.2, 0.1, 0.05};
    std::vector<double> errors;
    for (double l : levels) errors.push_back(3.0 * std::pow(l, 4));
    ConvergenceTable t = convergence_table("dt", levels, errors);
    CHECK(t.axis == "dt");
    CHECK(t.rows[0].order == 0.0);
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].order == doctest::Approx(4.0));
    CHECK(t.fitted_order == doctest::Approx(4.0));
    CHECK(t.monotone);
    errors[2] = errors[1] * 2;
    CHECK_FALSE(convergence_table("dt", levels, errors).monotone);
    CHECK_THROWS_AS(convergence_table("dt", {0.1}, {1.0}), Error);
    CHECK_THROWS_AS(convergence_table("dt", levels, {1.0, 2.0}), Error);
}

TEST_CASE("fits")
{
    std::vector<double> x, y, z;
    for (int i = 1; i <= 12; ++i) {
        x.push_back(2.0 * i);
        y.push_back(3.0 * std::pow(2.0 * i, -1.5));
        z.push_back(2.0 + 0.5 * std::pow(2.0 * i, -0.7));
    }
    const PowerFit p = fit_power_law(x, y);
    CHECK(p.exponent == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(p.log_constant == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(p.residual <= 1e-12);
    CHECK_FALSE(p.degenerate);

    const PowerFit d = fit_power_law(x, std::vector<double>(12, 1e-16));
    CHECK(d.degenerate);
    CHECK(d.exponent == kNegInfExponent);

    const OffsetPowerFit o = fit_offset_power(x, z);
    CHECK(o.exponent == doctest::Approx(-0.7).epsilon(1e-4));
    CHECK(o.offset == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(o.amplitude == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(o.residual <= 1e-4);
    CHECK_THROWS_AS(fit_offset_power({1.0, 2.0}, {1.0, 2.0}), Error);

    const std::vector<double> orders = observed_orders({1.0, 0.5, 0.25}, {1.0, 0.25, 0.0625});
    REQUIRE(orders.size() == 2);
    CHECK(orders[0] == doctest::Approx(2.0));
    CHECK(orders[1] == doctest::Approx(2.0));
}
