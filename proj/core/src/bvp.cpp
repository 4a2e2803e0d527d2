#include "kglab/bvp.hpp"

#include "kglab/error.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace kglab {

namespace {

/// Propagates a block in energy coordinates from node a to node b with m
/// Lawson substeps per interval.
Eigen::MatrixXcd propagate(const Rhs& rhs, const Eigen::VectorXcd& l, Eigen::MatrixXcd x, const TimeGrid& times,
                           int a, int b, int m)
{
    LawsonRk4 rk(l);
    const int dir = b >= a ? 1 : -1;
    for (int j = a; j != b; j += dir) rk.run(rhs, times.node(j), times.node(j + dir), m, x);
    return x;
}

double rel_diff(const Eigen::MatrixXcd& fine, const Eigen::MatrixXcd& coarse)
{
    return (fine - coarse).norm() / 15.0 / std::max(fine.norm(), 1e-300);
}

/// Lawson propagation over one interval, step count doubled until the
/// Richardson estimate meets tol.
Eigen::MatrixXcd interval_propagator(const Rhs& rhs, const Eigen::VectorXcd& l, const Eigen::MatrixXcd& x0,
                                     double s, double t, const StepperSpec& spec)
{
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(t - s) / spec.max_step)));
    Eigen::MatrixXcd coarse = x0;
    LawsonRk4 rk(l);
    rk.run(rhs, s, t, n, coarse);
    for (;;) {
        require(2L * n <= spec.max_steps, ErrorCode::ToleranceExceeded, "interval propagator step limit reached");
        Eigen::MatrixXcd fine = x0;
        rk.run(rhs, s, t, 2 * n, fine);
        if (rel_diff(fine, coarse) <= spec.tol) return fine;
        n *= 2;
        coarse = std::move(fine);
    }
}

} // namespace

BvpSolver::BvpSolver(const OperatorFamily& family, const BvpOptions& options)
    : family_(family), free_(build_free(family.grid_ptr(), family.mu())), options_(options)
{
    validate(options_.stepper);
    const TimeGrid& times = family_.times();
    const int n = family_.grid().size();
    const int J = times.size();
    const Rhs rhs = cauchy_energy_perturbation_rhs(family_, free_.omega);
    const Eigen::VectorXcd l = cauchy_energy_linear_part(free_.omega);

    // Free columns at -T and constrained rows at +T are both the x_m block
    // (x_p for the flipped rows).
    const int block = options_.flipped ? 0 : n;
    Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(2 * n, n);
    basis.middleRows(block, n).setIdentity();

    // Substeps from a probe of every eighth column; full block once.
    Eigen::MatrixXcd probe(2 * n, (n + 7) / 8);
    for (Eigen::Index c = 0; c < probe.cols(); ++c) probe.col(c) = basis.col(8 * c);
    int m = initial_substeps(times, options_.stepper);
    Eigen::MatrixXcd coarse = propagate(rhs, l, probe, times, 0, J - 1, m);
    for (;;) {
        require(2L * m * (J - 1) <= options_.stepper.max_steps, ErrorCode::ToleranceExceeded,
                "boundary block step limit reached");
        Eigen::MatrixXcd fine = propagate(rhs, l, probe, times, 0, J - 1, 2 * m);
        m *= 2;
        if (rel_diff(fine, coarse) <= options_.stepper.tol) break;
        coarse = std::move(fine);
    }
    m_ = m;
    const Eigen::MatrixXcd at_end = propagate(rhs, l, basis, times, 0, J - 1, m_);
    const Eigen::MatrixXcd rows = at_end.middleRows(block, n);
    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXcd>(rows).singularValues();
    sigma_max_ = sv[0];
    sigma_min_ = sv[sv.size() - 1];
    if (!(sigma_min_ > options_.singular_tol * sigma_max_))
        fail(ErrorCode::SingularSystem,
             "boundary-row block is singular (sigma_min = " + std::to_string(sigma_min_) + ")");
    lu_.compute(rows);
}

std::vector<Eigen::MatrixXcd> BvpSolver::sweep(const Eigen::MatrixXcd& x0, const ModeSource& f, int m) const
{
    const TimeGrid& times = family_.times();
    const Rhs rhs = cauchy_energy_perturbation_rhs(family_, free_.omega, f);
    LawsonRk4 rk(cauchy_energy_linear_part(free_.omega));
    std::vector<Eigen::MatrixXcd> out;
    out.reserve(times.size());
    Eigen::MatrixXcd x = x0;
    out.push_back(x);
    for (int j = 0; j + 1 < times.size(); ++j) {
        rk.run(rhs, times.node(j), times.node(j + 1), m, x);
        out.push_back(x);
    }
    return out;
}

SolveReport BvpSolver::solve(const ModeSource& f) const
{
    const TimeGrid& times = family_.times();
    const SpatialGrid& grid = family_.grid();
    const int n = grid.size();
    const int J = times.size();
    const int block = options_.flipped ? 0 : n;

    SolveReport rep;
    rep.method = SolveMethod::Bvp;
    rep.iterations = 1;
    rep.substeps = m_;
    rep.converged = true;
    std::vector<Eigen::VectorXcd> u(J, Eigen::VectorXcd::Zero(n)), v = u;
    if (source_norm(grid, times, f, options_.gamma, options_.s) == 0.0) {
        rep.solution = to_trajectory(grid, family_.time_grid(), u, v);
        return rep;
    }

    // Particular solution from zero data; its substep count is controlled
    // separately since the source may need finer steps than the basis.
    const Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(2 * n, 1);
    int m = m_;
    std::vector<Eigen::MatrixXcd> coarse = sweep(zero, f, m);
    for (;;) {
        require(2L * m * (J - 1) <= options_.stepper.max_steps, ErrorCode::ToleranceExceeded,
                "bvp sweep step limit reached");
        std::vector<Eigen::MatrixXcd> fine = sweep(zero, f, 2 * m);
        double d = 0.0, scale = 1e-300;
        for (int j = 0; j < J; ++j) {
            d = std::max(d, (fine[j] - coarse[j]).norm());
            scale = std::max(scale, fine[j].norm());
        }
        m *= 2;
        coarse = std::move(fine);
        rep.sweep_error = d / 15.0 / scale;
        if (rep.sweep_error <= options_.stepper.tol) break;
    }

    const Eigen::VectorXcd a = -lu_.solve(Eigen::VectorXcd(coarse.back().col(0).segment(block, n)));
    Eigen::MatrixXcd x0 = zero;
    x0.col(0).segment(block, n) = a;
    const std::vector<Eigen::MatrixXcd> x = sweep(x0, f, m);
    rep.substeps = m;
    Eigen::MatrixXcd uv;
    for (int j = 0; j < J; ++j) {
        from_energy(free_.omega, x[j], uv);
        u[j] = uv.col(0).head(n);
        v[j] = uv.col(0).tail(n);
    }
    const int check_m = std::max(1, static_cast<int>(std::ceil(times.step() / options_.check_step)));
    rep.residual = residual_check(family_, u, v, f, options_.gamma, options_.s, check_m);
    rep.solution = to_trajectory(grid, family_.time_grid(), u, v);
    rep.defects = boundary_defects(free_, rep.solution);
    return rep;
}

Eigen::SparseMatrix<cd> bvp_system_matrix(const OperatorFamily& family, bool flipped, const StepperSpec& stepper)
{
    const TimeGrid& times = family.times();
    const int n = family.grid().size();
    const int J = times.size();
    const long unknowns = 2L * n * J;
    require(unknowns <= kBvpDenseCap, ErrorCode::SizeCap, "space-time system exceeds the assembly cap");
    const FreePack pack = build_free(family.grid_ptr(), family.mu());
    const Rhs rhs = cauchy_energy_perturbation_rhs(family, pack.omega);
    const Eigen::VectorXcd l = cauchy_energy_linear_part(pack.omega);
    const double dt = times.step();
    const double edge = 1.0 / std::sqrt(dt);
    const int start = flipped ? n : 0;  // constrained block at -T
    const int end = flipped ? 0 : n;    // constrained block at +T
    const int d = 2 * n;

    std::vector<Eigen::Triplet<cd>> trip;
    trip.reserve(static_cast<std::size_t>(J - 1) * (d * d + d) + d);
    for (int r = 0; r < n; ++r) trip.emplace_back(r, start + r, edge);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    for (int j = 0; j + 1 < J; ++j) {
        const Eigen::MatrixXcd e = interval_propagator(rhs, l, id, times.node(j), times.node(j + 1), stepper);
        const int row = n + d * j;
        for (int r = 0; r < d; ++r) {
            trip.emplace_back(row + r, d * (j + 1) + r, 1.0 / dt);
            for (int c = 0; c < d; ++c)
                if (e(r, c) != 0.0) trip.emplace_back(row + r, d * j + c, -e(r, c) / dt);
        }
    }
    const int last_row = n + d * (J - 1);
    for (int r = 0; r < n; ++r) trip.emplace_back(last_row + r, d * (J - 1) + end + r, edge);
    Eigen::SparseMatrix<cd> m(unknowns, unknowns);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

double sigma_min_sparse(const Eigen::SparseMatrix<cd>& m, int* iterations, double tol, int max_iterations)
{
    Eigen::SparseLU<Eigen::SparseMatrix<cd>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    require(lu.info() == Eigen::Success, ErrorCode::SingularSystem, "space-time system is singular");
    // Subspace iteration on (M^* M)^{-1}: the smallest singular values come
    // in near-degenerate groups, which stall a single vector. Fixed start
    // block, so the result is reproducible.
    constexpr int kBlock = 16;
    Eigen::MatrixXcd z(m.cols(), kBlock);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (int c = 0; c < kBlock; ++c)
            z(i, c) = cd(std::sin(0.37 * (i + 1) * (c + 1)), std::cos(0.71 * i + 0.3 * c));
    z = Eigen::HouseholderQR<Eigen::MatrixXcd>(z).householderQ() * Eigen::MatrixXcd::Identity(z.rows(), kBlock);
    double lambda = 0.0;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const Eigen::MatrixXcd w = lu.solve(Eigen::MatrixXcd(lu.adjoint().solve(z)));
        const Eigen::MatrixXcd h = z.adjoint() * w;
        const double next = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(0.5 * (h + h.adjoint()),
                                                                            Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .maxCoeff();
        z = Eigen::HouseholderQR<Eigen::MatrixXcd>(w).householderQ() * Eigen::MatrixXcd::Identity(w.rows(), kBlock);
        const bool done = it > 0 && std::abs(next - lambda) <= tol * next;
        lambda = next;
        if (done) break;
    }
    if (iterations) *iterations = it + 1;
    return 1.0 / std::sqrt(lambda);
}

InjectivityReport bvp_injectivity(double mu, const PerturbationSpec& spec, const std::vector<InjectivityGrid>& grids,
                                  bool free_family, bool flipped)
{
    require(grids.size() >= 2, ErrorCode::InvalidArgument, "injectivity needs at least two levels");
    InjectivityReport rep;
    for (const auto& g : grids) {
        require(2L * g.N * g.J <= kBvpDenseCap, ErrorCode::SizeCap, "space-time system exceeds the assembly cap");
        PerturbationSpec s = spec;
        if (free_family) s.potential = s.principal = false;
        if (s.taper_radius <= 0.0) s.taper_radius = 0.6 * g.L;
        auto grid = make_grid(g.N, g.L);
        auto times = make_time_grid(g.T, g.J);
        const OperatorFamily family = assemble_A(grid, times, mu, s);
        InjectivityLevel level{g.N, g.J, times->step(), 0.0, 0};
        level.sigma_min = sigma_min_sparse(bvp_system_matrix(family, flipped), &level.iterations);
        rep.levels.push_back(level);
    }
    const auto& lv = rep.levels;
    rep.finest_ratio = lv.back().sigma_min / lv[lv.size() - 2].sigma_min;
    rep.spread_ratio = lv.back().sigma_min / lv.front().sigma_min;
    rep.pass = rep.finest_ratio >= 0.5 && rep.spread_ratio >= 0.5;
    return rep;
}

} // namespace kglab
