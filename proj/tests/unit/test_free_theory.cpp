#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kglab/error.hpp"
#include "kglab/free_theory.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>

using namespace kglab;
using namespace kgtest;

namespace {

double block_dev(const BlockMultiplier& x, const BlockMultiplier& y)
{
    return (x - y).norm();
}

// Datum of a single mode (index i) with amplitude pair (a, b).
void mode_datum(int n, int i, cd a, cd b, Eigen::VectorXcd& u, Eigen::VectorXcd& v)
{
    u = Eigen::VectorXcd::Zero(n);
    v = Eigen::VectorXcd::Zero(n);
    u[i] = a;
    v[i] = b;
}

} // namespace

TEST_CASE("projections fix their eigenvectors")
{
    const FreePack pack = build_free(make_grid(16, 5.0), 1.0);
    for (int i = 0; i < 16; ++i) {
        const double w = pack.omega[i];
        Eigen::VectorXcd u, v, pu, pv;
        mode_datum(16, i, 1.0, w, u, v);
        pack.Pp.apply_modes(u, v, pu, pv);
        CHECK(rel(pu, u) < 1e-14);
        CHECK(rel(pv, v) < 1e-14);
        pack.Pm.apply_modes(u, v, pu, pv);
        CHECK(pu.norm() + pv.norm() < 1e-14);
        mode_datum(16, i, 1.0, -w, u, v);
        pack.Pm.apply_modes(u, v, pu, pv);
        CHECK(rel(pu, u) < 1e-14);
        CHECK(rel(pv, v) < 1e-14);
    }
}

TEST_CASE("projections against a 2x2 eigendecomposition per mode")
{
    const double L = 7.0, mu = 0.8;
    const FreePack pack = build_free(make_grid(32, L), mu);
    std::mt19937_64 rng(11);
    const Eigen::VectorXcd u = random_vector(32, rng), v = random_vector(32, rng);
    Eigen::VectorXcd pu, pv;
    pack.Pp.apply_modes(u, v, pu, pv);
    for (int i = 0; i < 32; ++i) {
        const double k = wavenumber(i, 32, L);
        Eigen::Matrix2cd h;
        h << 0.0, 1.0, k * k + mu * mu, 0.0;
        Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(h);
        const Eigen::Matrix2cd V = es.eigenvectors();
        Eigen::Matrix2cd D = Eigen::Matrix2cd::Zero();
        for (int e = 0; e < 2; ++e)
            if (es.eigenvalues()[e].real() > 0) D(e, e) = 1.0;
        const Eigen::Matrix2cd P = V * D * V.inverse();
        const Eigen::Vector2cd x(u[i], v[i]);
        const Eigen::Vector2cd y = P * x;
        CHECK(std::abs(y[0] - pu[i]) < 1e-12 * (1 + x.norm() * std::max(1.0, k * k)));
        CHECK(std::abs(y[1] - pv[i]) < 1e-12 * (1 + x.norm() * std::max(1.0, k * k)));
    }
}

TEST_CASE("projection algebra and H0 eigenvalues")
{
    for (int n : {8, 32, 128}) {
        const FreePack pack = build_free(make_grid(n, 0.3 * n), 1.0);
        const BlockMultiplier I = BlockMultiplier::identity(n);
        CHECK(block_dev(pack.Pp + pack.Pm, I) <= 1e-12);
        CHECK(block_dev(compose(pack.Pp, pack.Pp), pack.Pp) <= 1e-12);
        CHECK(compose(pack.Pp, pack.Pm).norm() <= 1e-12);
        for (int i = 0; i < n; ++i) {
            const double w = pack.omega[i];
            Eigen::VectorXcd u, v, hu, hv;
            mode_datum(n, i, 1.0, w, u, v);
            pack.H0.apply_modes(u, v, hu, hv);
            CHECK(rel(hu, w * u) < 1e-12);
            CHECK(rel(hv, w * v) < 1e-12);
        }
        CHECK((pack.B0.symbol().array().square() - pack.A0.symbol().array()).abs().maxCoeff()
              <= 1e-12 * pack.A0.symbol().cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(build_free(make_grid(8, 1.0), 0.0), Error);
}

TEST_CASE("free evolution")
{
    const FreePack pack = build_free(make_grid(16, 4.0), 1.0);
    CHECK(block_dev(free_evolution(pack, 0.0), BlockMultiplier::identity(16)) < 1e-15);
    const double t = 1.7;
    for (int i = 0; i < 16; ++i) {
        Eigen::VectorXcd u, v, eu, ev;
        mode_datum(16, i, 1.0, pack.omega[i], u, v);
        free_evolution(pack, t).apply_modes(u, v, eu, ev);
        const cd phase = std::polar(1.0, pack.omega[i] * t);
        CHECK(rel(eu, phase * u) < 1e-13);
        CHECK(rel(ev, phase * v) < 1e-13);
    }
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-20.0, 20.0);
    for (int trial = 0; trial < 5; ++trial) {
        const double s = U(rng), r = U(rng);
        CHECK(block_dev(compose(free_evolution(pack, s), free_evolution(pack, r)), free_evolution(pack, s + r)) <= 1e-12);
    }
}

TEST_CASE("Feynman mode kernel")
{
    CHECK(std::abs(free_feynman_mode_kernel(1.0, 0.0) - 1.0 / cd(0.0, 2.0)) < 1e-15);
    for (double t : {0.3, 2.0, 11.0}) CHECK(std::abs(free_feynman_mode_kernel(1.3, t) - free_feynman_mode_kernel(1.3, -t)) < 1e-15);

    // Jump of the first derivative at 0 is 1 (one-sided differences).
    const double w = 1.7, e = 1e-6;
    const cd g0 = free_feynman_mode_kernel(w, 0.0);
    const cd jump = (free_feynman_mode_kernel(w, e) - g0) / e - (g0 - free_feynman_mode_kernel(w, -e)) / e;
    CHECK(std::abs(jump - 1.0) < 1e-5);

    // dt * [second difference + w^2] reproduces the discrete delta at second order.
    auto defect = [w](double dt) {
        double worst = 0.0;
        for (int j = -200; j <= 200; ++j) {
            const double t = j * dt;
            const cd d2 = (free_feynman_mode_kernel(w, t + dt) - 2.0 * free_feynman_mode_kernel(w, t) +
                           free_feynman_mode_kernel(w, t - dt)) / (dt * dt);
            const cd lhs = dt * (d2 + w * w * free_feynman_mode_kernel(w, t));
            worst = std::max(worst, std::abs(lhs - (j == 0 ? 1.0 : 0.0)));
        }
        return worst;
    };
    const double order = std::log2(defect(0.02) / defect(0.01));
    CHECK(order == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("Feynman kernel data are polarized by the sign of t")
{
    const FreePack pack = build_free(make_grid(16, 4.0), 1.0);
    for (double t : {-3.0, -0.5, 0.5, 3.0}) {
        Eigen::VectorXcd u(16), v(16), pu, pv;
        for (int i = 0; i < 16; ++i) {
            const double w = pack.omega[i];
            u[i] = free_feynman_mode_kernel(w, t);
            v[i] = (t > 0 ? w : -w) * u[i];  // D_t of e^{i w |t|}
        }
        (t > 0 ? pack.Pm : pack.Pp).apply_modes(u, v, pu, pv);
        CHECK(std::sqrt(pu.squaredNorm() + pv.squaredNorm()) <= 1e-12 * std::sqrt(u.squaredNorm() + v.squaredNorm()));
    }
}

TEST_CASE("retarded and advanced mode kernels")
{
    CHECK(free_retarded_mode_kernel(1.0, -0.5) == 0.0);
    CHECK(std::abs(free_retarded_mode_kernel(1.0, pi / 2) - 1.0) < 1e-15);
    CHECK(std::abs(free_retarded_mode_kernel(2.0, 1e-7) / 1e-7 - 1.0) < 1e-6);
    CHECK(free_advanced_mode_kernel(1.0, 0.5) == 0.0);
    CHECK(std::abs(free_advanced_mode_kernel(1.3, -0.8) - free_retarded_mode_kernel(1.3, 0.8)) < 1e-15);
}

TEST_CASE("single-slice sources propagate by their polarization")
{
    const auto g = make_grid(16, 4.0);
    const FreePack pack = build_free(g, 1.0);
    const auto times = make_time_grid(2.0, 41);
    const int i = 3, j0 = 15;
    const double w = pack.omega[i], dt = times->step(), t0 = times->node(j0);
    for (int sign : {+1, -1}) {
        Eigen::VectorXcd cu, cv;
        mode_datum(16, i, 1.0, sign * w, cu, cv);
        CauchyTrajectory src{SpaceTimeField(times, 16), SpaceTimeField(times, 16)};
        src.u[j0] = g->from_modes(cu);
        src.v[j0] = g->from_modes(cv);
        const CauchyTrajectory out = free_diag_feynman_apply(pack, src);
        for (int j = 0; j < times->size(); ++j) {
            const Eigen::VectorXcd ou = g->to_modes(out.u[j]);
            const double t = times->node(j);
            if ((sign > 0 && j < j0) || (sign < 0 && j > j0)) {
                CHECK(ou.norm() < 1e-14);
            } else if (j != j0) {
                const cd expect = (sign > 0 ? 1.0 : -1.0) * cd(0.0, dt) * std::polar(1.0, sign * w * (t - t0));
                CHECK(std::abs(ou[i] - expect) < 1e-13);
                CHECK(ou.norm() - std::abs(ou[i]) < 1e-13);
            }
        }
    }
}

TEST_CASE("impulse in time reproduces the scalar Feynman kernel")
{
    const auto g = make_grid(16, 4.0);
    const FreePack pack = build_free(g, 1.0);
    const auto times = make_time_grid(3.0, 61);
    const int c = times->center();
    for (int i : {0, 2, 13}) {
        CauchyTrajectory src{SpaceTimeField(times, 16), SpaceTimeField(times, 16)};
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(16);
        e[i] = -1.0 / times->step();  // (0, -f) with f a unit impulse
        src.v[c] = g->from_modes(e);
        const CauchyTrajectory out = free_diag_feynman_apply(pack, src);
        for (int j = 0; j < times->size(); ++j) {
            if (j == c) continue;
            const cd u = g->to_modes(out.u[j])[i];
            CHECK(std::abs(u - free_feynman_mode_kernel(pack.omega[i], times->node(j))) < 1e-8);
        }
    }
}

TEST_CASE("node-sampled application converges at second order")
{
    const auto g = make_grid(8, 3.0);
    const FreePack pack = build_free(g, 1.0);
    const Eigen::VectorXcd profile = g->plane_wave(1) + 0.5 * g->plane_wave(-2);
    const CauchySource f = [&](double t) {
        const cd a = std::exp(-t * t) * std::polar(1.0, 0.7 * t);
        return CauchyDatum{a * profile, cd(0.0, 1.0) * a * profile};
    };
    std::vector<double> err;
    const TimeGridPtr exact_times = make_time_grid(6.0, 1921);
    const CauchyTrajectory exact = free_diag_feynman_apply(pack, exact_times, f);
    for (int J : {121, 241, 481}) {
        const auto times = make_time_grid(6.0, J);
        CauchyTrajectory src{SpaceTimeField(times, 8), SpaceTimeField(times, 8)};
        for (int j = 0; j < J; ++j) {
            const CauchyDatum d = f(times->node(j));
            src.u[j] = d.u;
            src.v[j] = d.v;
        }
        const CauchyTrajectory out = free_diag_feynman_apply(pack, src);
        const int stride = (1921 - 1) / (J - 1);
        double e = 0.0;
        for (int j = 0; j < J; ++j) e = std::max(e, (out.u[j] - exact.u[j * stride]).norm());
        err.push_back(e);
    }
    CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.15));
    CHECK(std::log2(err[1] / err[2]) == doctest::Approx(2.0).epsilon(0.15));
}
