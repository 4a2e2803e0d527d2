#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kglab/error.hpp"
#include "kglab/field.hpp"
#include "kglab/spatial_operator.hpp"
#include "support.hpp"

using namespace kglab;
using namespace kgtest;

TEST_CASE("grid of 8 points on [-pi, pi)")
{
    const auto g = make_grid(8, pi);
    CHECK(g->spacing() == doctest::Approx(pi / 4).epsilon(1e-15));
    std::vector<int> idx;
    for (int i = 0; i < 8; ++i) idx.push_back(g->signed_index(i));
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<int>{-4, -3, -2, -1, 0, 1, 2, 3});
    for (int i = 0; i < 8; ++i) CHECK(g->modes()[i] == doctest::Approx(g->signed_index(i)).epsilon(1e-15));
}

TEST_CASE("64-point grid modes are spaced pi / 20")
{
    const auto g = make_grid(64, 20.0);
    for (int i = 1; i < 32; ++i) CHECK(g->modes()[i] - g->modes()[i - 1] == doctest::Approx(pi / 20));
}

TEST_CASE("odd and tiny grids are rejected")
{
    try {
        make_grid(7, 1.0);
        FAIL("accepted N = 7");
    } catch (const Error& e) {
        CHECK(std::string(e.what()) == "N must be even");
    }
    CHECK_THROWS_AS(make_grid(6, 1.0), Error);
}

TEST_CASE("FFT agrees with the explicit DFT matrix")
{
    std::mt19937_64 rng(1);
    const auto g = make_grid(16, 3.0);
    const Eigen::VectorXcd u = random_vector(16, rng);
    CHECK(rel(g->to_modes(u), dft_matrix(*g) * u) < 1e-13);
    CHECK(rel(g->from_modes(g->to_modes(u)), u) < 1e-14);
}

TEST_CASE("time grid is symmetric with trapezoid weights")
{
    const auto t = make_time_grid(2.0, 9);
    CHECK(t->step() == doctest::Approx(0.5));
    CHECK(t->node(0) == -2.0);
    CHECK(t->node(8) == 2.0);
    CHECK(t->node(4) == 0.0);
    CHECK(t->weights()[0] == doctest::Approx(0.25));
    CHECK(t->weights()[4] == doctest::Approx(0.5));
    CHECK_THROWS_AS(make_time_grid(1.0, 10), Error);
}

TEST_CASE("multiplier examples")
{
    const auto g = make_grid(16, pi);
    std::mt19937_64 rng(2);
    const Eigen::VectorXcd u = random_vector(16, rng);
    const auto id = multiplier_op(g, [](double) { return cd(1.0); });
    CHECK(rel(id.apply(u), u) < 1e-15);

    const auto a = multiplier_op(g, [](double k) { return cd(k * k + 1.0); });
    const Eigen::VectorXcd e2 = g->plane_wave(2);
    CHECK(rel(a.apply(e2), 5.0 * e2) < 1e-13);

    // Spectral derivative as a dense matrix on point values: F^* diag(k) F.
    const auto d = multiplier_op(g, [](double k) { return cd(k, 0.0); });
    const Eigen::MatrixXcd F = dft_matrix(*g);
    Eigen::VectorXcd k(16);
    for (int i = 0; i < 16; ++i) k[i] = wavenumber(i, 16, pi);
    const Eigen::MatrixXcd dense = F.adjoint() * k.asDiagonal() * F;
    CHECK((d.physical_matrix() - dense).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rel(SpatialOperator::from_physical(g, dense).mode_matrix(), d.mode_matrix()) < 1e-13);

    CHECK_THROWS_AS(multiplier_op(g, [](double) { return cd(std::nan(""), 0.0); }), Error);
}

TEST_CASE("principal square root")
{
    const auto g = make_grid(16, 4.0);
    const auto a = multiplier_op(g, [](double k) { return cd(k * k + 1.0); });
    const auto s = principal_sqrt(a);
    REQUIRE(s.is_multiplier());
    for (int i = 0; i < 16; ++i) {
        const double k = wavenumber(i, 16, 4.0);
        CHECK(std::abs(s.symbol()[i] - std::sqrt(k * k + 1.0)) < 1e-14);
    }
    const auto id = principal_sqrt(SpatialOperator::identity(g));
    CHECK(rel(id.mode_matrix(), Eigen::MatrixXcd::Identity(16, 16)) < 1e-14);

    SUBCASE("dense Hermitian positive definite against its eigendecomposition")
    {
        std::mt19937_64 rng(3);
        const Eigen::MatrixXcd m = random_matrix(16, rng);
        const Eigen::MatrixXcd t = m * m.adjoint() + Eigen::MatrixXcd::Identity(16, 16);
        const Eigen::MatrixXcd r = principal_sqrt(t);
        CHECK((r * r - t).norm() / t.norm() < 1e-10);
        CHECK((r - r.adjoint()).norm() < 1e-12 * r.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(t);
        const Eigen::MatrixXcd oracle =
            es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
        CHECK(rel(r, oracle) < 1e-12);
    }
    SUBCASE("non-Hermitian input keeps its root in the right half-plane")
    {
        std::mt19937_64 rng(4);
        const Eigen::MatrixXcd t = 4.0 * Eigen::MatrixXcd::Identity(12, 12) + 0.3 * random_matrix(12, rng);
        const Eigen::MatrixXcd r = principal_sqrt(t);
        CHECK((r * r - t).norm() / t.norm() < 1e-10);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(r);
        CHECK(es.eigenvalues().real().minCoeff() > 0.0);
    }
    SUBCASE("spectrum on the branch cut")
    {
        const auto bad = multiplier_op(g, [](double k) { return cd(1.0 - k * k); });
        try {
            (void)principal_sqrt(bad);
            FAIL("accepted a negative spectrum");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SpectrumTooClose);
        }
    }
}

TEST_CASE("sobolev norms")
{
    const auto g = make_grid(8, pi);
    const GridFunction one = GridFunction::Ones(8);
    CHECK(sobolev_norm(*g, one, 0.0) == doctest::Approx(std::sqrt(2 * pi)).epsilon(1e-14));
    CHECK(sobolev_norm(*g, g->plane_wave(2), 1.0) == doctest::Approx(std::sqrt(5.0) * std::sqrt(2 * pi)).epsilon(1e-14));

    std::mt19937_64 rng(5);
    const auto g2 = make_grid(32, 5.0);
    const GridFunction u = random_vector(32, rng);
    Eigen::VectorXcd w(32);
    for (int i = 0; i < 32; ++i) w[i] = 1.0 + std::pow(wavenumber(i, 32, 5.0), 2);
    const Eigen::MatrixXcd F = dft_matrix(*g2);
    const double oracle = std::sqrt(g2->spacing()) * (w.asDiagonal() * (F * u)).norm();
    CHECK(sobolev_norm(*g2, u, 2.0) == doctest::Approx(oracle).epsilon(1e-13));
    // s = 0 reproduces the h-weighted l2 norm.
    CHECK(std::abs(sobolev_norm(*g2, u, 0.0) - std::sqrt(g2->spacing()) * u.norm()) <= 1e-13 * u.norm());
    CHECK(std::abs(l2_norm(*g2, u) - std::sqrt(g2->spacing()) * u.norm()) <= 1e-13 * u.norm());
}

TEST_CASE("weighted space-time norm")
{
    const auto g = make_grid(8, pi);
    const auto times = make_time_grid(4.0, 41);
    SpaceTimeField zero(times, 8);
    CHECK(y_norm(*g, zero, 1.0, 0.0) == 0.0);

    SpaceTimeField one(times, 8);
    one[times->center()] = GridFunction::Ones(8) / std::sqrt(2 * pi);
    CHECK(y_norm(*g, one, 1.0, 0.0) == doctest::Approx(std::sqrt(times->weights()[times->center()])));

    // f(t) = <t>^{-1} times a unit profile: the norm is sqrt(sum_j w_j).
    SpaceTimeField prof(times, 8);
    double sum = 0.0;
    for (int j = 0; j < times->size(); ++j) {
        const double t = times->node(j);
        prof[j] = GridFunction::Ones(8) / (std::sqrt(2 * pi) * std::sqrt(1 + t * t));
        sum += (j == 0 || j == times->size() - 1 ? 0.5 : 1.0) * 0.2;
    }
    CHECK(std::abs(y_norm(*g, prof, 1.0, 0.0) - std::sqrt(sum)) < 1e-12);
    CHECK(gamma_admissible(1.0, 1.5));
    CHECK_FALSE(gamma_admissible(0.5, 1.5));
    CHECK_FALSE(gamma_admissible(2.0, 1.5));
}

TEST_CASE("multipliers commute and adjoints are consistent")
{
    std::mt19937_64 rng(6);
    const auto g = make_grid(32, 6.0);
    const auto s = multiplier_op(g, [](double k) { return cd(std::cos(k), k); });
    const auto t = multiplier_op(g, [](double k) { return cd(k * k + 2.0, -1.0); });
    const GridFunction u = random_vector(32, rng), v = random_vector(32, rng);
    const double bound = 1e-12 * s.norm() * t.norm() * l2_norm(*g, u);
    CHECK(l2_norm(*g, compose(s, t).apply(u) - compose(t, s).apply(u)) <= bound);

    const auto dense = SpatialOperator::dense(g, random_matrix(32, rng));
    for (const auto* op : {&s, &t, &dense}) {
        const cd lhs = inner(*g, op->apply(u), v);
        const cd rhs = inner(*g, u, op->adjoint().apply(v));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs) + 1e-12);
    }
    // The two representations of one multiplier agree.
    const auto as_dense = SpatialOperator::dense(g, s.mode_matrix());
    CHECK(rel(as_dense.apply(u), s.apply(u)) < 1e-13);
}

TEST_CASE("squaring a principal root gives the input back")
{
    std::mt19937_64 rng(7);
    const auto g = make_grid(16, 4.0);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXcd m = random_matrix(16, rng);
        const auto t = SpatialOperator::dense(g, m * m.adjoint() + 0.5 * Eigen::MatrixXcd::Identity(16, 16));
        const auto r = principal_sqrt(t);
        CHECK((compose(r, r) - t).norm() <= 1e-10 * t.norm());
    }
}
