#include "kglab/inverses.hpp"

#include "kglab/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kglab {

namespace {

const cd I(0.0, 1.0);

using Nodes = std::vector<Eigen::VectorXcd>;

/// Cubic Hermite interpolant of node values and node derivatives.
class HermiteNodes {
public:
    HermiteNodes(const TimeGrid& times, const Nodes& value, const Nodes& slope)
        : times_(times), value_(value), slope_(slope)
    {
    }

    Eigen::VectorXcd operator()(double t) const
    {
        const int j = times_.interval(t);
        const double dt = times_.step();
        const double tau = std::clamp((t - times_.node(j)) / dt, 0.0, 1.0);
        const double t2 = tau * tau, t3 = t2 * tau;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tau;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * value_[j] + (h10 * dt) * slope_[j] + h01 * value_[j + 1] + (h11 * dt) * slope_[j + 1];
    }

private:
    const TimeGrid& times_;
    const Nodes& value_;
    const Nodes& slope_;
};

/// Node values of one diagonal component with m substeps per interval.
/// Jumps are w(t_j+) - w(t_j-).
Nodes run_component(const DiagonalGenerator& gen, const Eigen::VectorXd& omega, Component c, bool forward,
                    const ModeSource& g, const Eigen::VectorXcd& start, const TimeGrid& times, int m,
                    const std::map<int, Eigen::VectorXcd>& jumps)
{
    const int J = times.size();
    const Rhs rhs = diagonal_perturbation_rhs(gen, c, omega, g);
    Nodes out(J);
    Eigen::MatrixXcd y = start;
    LawsonRk4 rk(diagonal_linear_part(c, omega));
    const int first = forward ? 0 : J - 1;
    const int last = forward ? J - 1 : 0;
    const int dir = forward ? 1 : -1;
    for (int j = first;; j += dir) {
        if (auto it = jumps.find(j); it != jumps.end()) {
            const Eigen::VectorXcd& jump = it->second;
            out[j] = y.col(0) + 0.5 * dir * jump;
            y.col(0) += dir * jump;
        } else {
            out[j] = y.col(0);
        }
        if (j == last) break;
        rk.run(rhs, times.node(j), times.node(j + dir), m, y);
    }
    return out;
}

double max_diff(const Nodes& a, const Nodes& b, double& scale)
{
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        d = std::max(d, (a[j] - b[j]).norm());
        scale = std::max(scale, a[j].norm());
    }
    return d;
}

/// Doubles m until the Richardson estimate of both components meets tol.
struct ControlledPair {
    Nodes p, q;
    int m = 1;
    double est = 0.0;
};

ControlledPair controlled_pair(const std::function<std::pair<Nodes, Nodes>(int)>& run, int m0,
                               long intervals, const StepperSpec& spec)
{
    int m = std::max(1, m0);
    auto coarse = run(m);
    for (;;) {
        require(2L * m * intervals <= spec.max_steps, ErrorCode::ToleranceExceeded,
                "sweep step limit reached before the tolerance was met");
        auto fine = run(2 * m);
        double scale = 1e-300;
        const double d = std::max(max_diff(fine.first, coarse.first, scale), max_diff(fine.second, coarse.second, scale));
        const double est = d / 15.0 / scale;
        if (est <= spec.tol) return {std::move(fine.first), std::move(fine.second), 2 * m, est};
        m *= 2;
        coarse = std::move(fine);
    }
}

enum class Conditions { Feynman, Retarded, Advanced };

/// Solves (1 - C) y = -C x with C = (X - B0) S^{-1} at one end.
class EndCondition {
public:
    EndCondition() = default;
    EndCondition(const Eigen::MatrixXcd& x, const Eigen::VectorXd& omega, const Eigen::MatrixXcd& s_inv)
    {
        Eigen::MatrixXcd d = x;
        d.diagonal() -= omega.cast<cd>();
        c_ = d * s_inv;
        active_ = c_.norm() > 0.0;
        if (active_) lu_.compute(Eigen::MatrixXcd::Identity(c_.rows(), c_.cols()) - c_);
    }

    Eigen::VectorXcd operator()(const Eigen::VectorXcd& other) const
    {
        if (!active_) return Eigen::VectorXcd::Zero(other.size());
        return -lu_.solve(c_ * other);
    }

private:
    Eigen::MatrixXcd c_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
    bool active_ = false;
};

double correction(const FreePack& pack, const Nodes& u, const Nodes& v, const Nodes& u0, const Nodes& v0)
{
    double d = 0.0, scale = 1e-300;
    for (std::size_t j = 0; j < u.size(); ++j) {
        d = std::max(d, energy_norm_modes(pack, u[j] - u0[j], v[j] - v0[j]));
        scale = std::max(scale, energy_norm_modes(pack, u[j], v[j]));
    }
    return d / scale;
}

SolveReport refine(const SolverContext& ctx, const ModeSource& f, const SolveOptions& opt, Conditions cond)
{
    validate(opt);
    validate(opt.stepper);
    const TimeGrid& times = ctx.times();
    const SpatialGrid& grid = ctx.grid();
    const int J = times.size();
    const int n = grid.size();
    const Transform& tr = ctx.transform();
    const OperatorSamples& B = tr.B();
    const OperatorSamples& R = *ctx.factor().R;
    const FreePack& pack = ctx.free_pack();

    const double fnorm = source_norm(grid, times, f, opt.gamma, opt.s);
    require(fnorm > 0.0, ErrorCode::ZeroDatum, "source vanishes on the time grid");

    const bool p_forward = cond != Conditions::Advanced;
    const bool q_forward = cond == Conditions::Retarded;
    const bool free_ends = cond == Conditions::Feynman && opt.boundary == FeynmanBoundary::Free;

    EndCondition at_plus, at_minus;
    if (free_ends) {
        at_plus = EndCondition(B.node(J - 1).adjoint(), pack.omega, tr.S_inverse().node(J - 1));
        at_minus = EndCondition(B.node(0), pack.omega, tr.S_inverse().node(0));
    }

    Nodes u(J, Eigen::VectorXcd::Zero(n)), v = u;
    Nodes sp(J, Eigen::VectorXcd::Zero(n)), sq = sp, dsp = sp, dsq = sp;
    Eigen::VectorXcd bp = Eigen::VectorXcd::Zero(n), bq = bp;
    const bool coupled = !ctx.remainder_vanishes();

    const HermiteNodes hp(times, sp, dsp), hq(times, sq, dsq);
    const ModeSource gp = [&](double t) -> Eigen::VectorXcd {
        Eigen::VectorXcd g = -f(t);
        if (coupled) g += hp(t);
        return g;
    };
    const ModeSource gq = [&](double t) -> Eigen::VectorXcd {
        Eigen::VectorXcd g = -f(t);
        if (coupled) g += hq(t);
        return g;
    };
    const DiagonalGenerator& gen = ctx.generator();
    const std::map<int, Eigen::VectorXcd> none;

    // p first, then the +T condition sees p(T); q next, then the -T
    // condition for the following pass sees q(-T).
    auto sweep = [&](int m) {
        Nodes p = run_component(gen, pack.omega, Component::P, p_forward, gp, bp, times, m, none);
        if (free_ends) bq = at_plus(p[J - 1]);
        Nodes q = run_component(gen, pack.omega, Component::Q, q_forward, gq, bq, times, m, none);
        return std::pair{std::move(p), std::move(q)};
    };

    SolveReport rep;
    rep.method = cond == Conditions::Feynman    ? SolveMethod::Feynman
                 : cond == Conditions::Retarded ? SolveMethod::Retarded
                                                : SolveMethod::Advanced;
    rep.factor_method = ctx.factor().method;
    rep.factor_K = ctx.factor().K;

    int m = initial_substeps(times, opt.stepper);
    const int check_m = std::max(1, static_cast<int>(std::ceil(times.step() / opt.check_step)));
    double prev = 0.0;
    for (int k = 1; k <= opt.k_max; ++k) {
        Nodes p, q;
        if (k == 1) {
            ControlledPair cp = controlled_pair(sweep, m, J - 1, opt.stepper);
            m = cp.m;
            rep.sweep_error = cp.est;
            p = std::move(cp.p);
            q = std::move(cp.q);
        } else {
            std::tie(p, q) = sweep(m);
        }
        if (free_ends) bp = at_minus(q[0]);

        Nodes u_new(J), v_new(J);
        for (int j = 0; j < J; ++j) tr.inverse_modes(j, p[j], q[j], u_new[j], v_new[j]);
        const double c = k == 1 ? 1.0 : correction(pack, u_new, v_new, u, v);
        u = std::move(u_new);
        v = std::move(v_new);
        rep.iterations = k;
        if (k > 1) {
            rep.corrections.push_back(c);
            if (k > 2 && prev > 0.0) rep.contraction = std::max(rep.contraction, c / prev);
        }

        rep.residual = residual_check(ctx.family(), u, v, f, opt.gamma, opt.s, check_m);
        if (rep.residual.relative <= opt.tol) {
            rep.converged = true;
            break;
        }
        // Corrections far below the target with the residual still above it:
        // the discretization, not the iteration, limits the residual.
        if (k > 1 && c <= 1e-2 * opt.tol) break;
        if (k > 2 && c > prev && c > 1e-2 * opt.tol)
            fail(ErrorCode::NoContraction, "successive corrections grow; the remainder iteration does not contract");
        prev = c;
        if (!coupled && !free_ends) break;

        for (int j = 0; j < J; ++j) {
            if (!coupled) break;
            const Eigen::MatrixXcd& r = R.node(j);
            const Eigen::MatrixXcd dr = node_derivative(R, j);
            const Eigen::VectorXcd iv = I * v[j];
            sp[j] = r * u[j];
            sq[j] = r.adjoint() * u[j];
            dsp[j] = dr * u[j] + r * iv;
            dsq[j] = dr.adjoint() * u[j] + r.adjoint() * iv;
        }
    }
    rep.substeps = m;
    rep.solution = to_trajectory(grid, ctx.family().time_grid(), u, v);
    rep.defects = boundary_defects(pack, rep.solution);
    return rep;
}

} // namespace

std::string_view to_string(SolveMethod m) noexcept
{
    switch (m) {
    case SolveMethod::Feynman: return "feynman";
    case SolveMethod::Retarded: return "retarded";
    case SolveMethod::Advanced: return "advanced";
    case SolveMethod::Bvp: return "bvp";
    }
    return "unknown";
}

SolveMethod parse_solve_method(std::string_view name)
{
    for (auto m : {SolveMethod::Feynman, SolveMethod::Retarded, SolveMethod::Advanced, SolveMethod::Bvp})
        if (to_string(m) == name) return m;
    fail(ErrorCode::InvalidArgument, "unknown solve method '" + std::string(name) + "'");
}

std::string_view to_string(FeynmanBoundary b) noexcept
{
    return b == FeynmanBoundary::Free ? "free" : "diagonal";
}

FeynmanBoundary parse_feynman_boundary(std::string_view name)
{
    if (name == "free") return FeynmanBoundary::Free;
    if (name == "diagonal") return FeynmanBoundary::Diagonal;
    fail(ErrorCode::InvalidArgument, "unknown boundary mode '" + std::string(name) + "'");
}

void validate(const SolveOptions& o)
{
    require(o.tol > 0.0, ErrorCode::InvalidArgument, "solver tol must be positive");
    require(o.k_max >= 1, ErrorCode::InvalidArgument, "k_max must be at least 1");
    require(o.gamma >= 0.0, ErrorCode::InvalidArgument, "gamma must be non-negative");
    require(o.check_step > 0.0, ErrorCode::InvalidArgument, "check_step must be positive");
}

SolverContext::SolverContext(const OperatorFamily& family, FactorizationResult factor)
    : family_(family),
      factor_(std::move(factor)),
      transform_(build_transform(factor_)),
      generator_(diagonal_generator(factor_)),
      free_(build_free(family.grid_ptr(), family.mu()))
{
    const OperatorSamples& r = *factor_.R;
    zero_remainder_ = r.is_constant() && r.node(0).norm() == 0.0;
}

DiagonalModes feynman_apply_diag(const SolverContext& ctx, const DiagonalSource& g, const StepperSpec& spec)
{
    validate(spec);
    const TimeGrid& times = ctx.times();
    const int J = times.size();
    const int n = ctx.grid().size();
    std::map<int, Eigen::VectorXcd> jp, jq;
    for (const auto& imp : g.impulses) {
        require(imp.node >= 0 && imp.node < J, ErrorCode::InvalidArgument, "impulse node outside the time grid");
        if (imp.p.size()) jp[imp.node] = I * imp.p;
        if (imp.q.size()) jq[imp.node] = I * imp.q;
    }
    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(n);
    auto run = [&](int m) {
        return std::pair{run_component(ctx.generator(), ctx.free_pack().omega, Component::P, true, g.p, zero, times, m, jp),
                         run_component(ctx.generator(), ctx.free_pack().omega, Component::Q, false, g.q, zero, times, m, jq)};
    };
    ControlledPair cp = controlled_pair(run, initial_substeps(times, spec), J - 1, spec);
    return {std::move(cp.p), std::move(cp.q), cp.m, cp.est};
}

SolveReport feynman_solve(const SolverContext& ctx, const ModeSource& f, const SolveOptions& options)
{
    return refine(ctx, f, options, Conditions::Feynman);
}

SolveReport retarded_solve(const SolverContext& ctx, const ModeSource& f, const SolveOptions& options)
{
    return refine(ctx, f, options, Conditions::Retarded);
}

SolveReport advanced_solve(const SolverContext& ctx, const ModeSource& f, const SolveOptions& options)
{
    return refine(ctx, f, options, Conditions::Advanced);
}

SolveReport feynman_solve_escalating(const OperatorFamily& family, const ModeSource& f,
                                     const SolveOptions& options, FactorOptions factor)
{
    std::vector<FactorOptions> chain{factor};
    if (factor.method == FactorMethod::Adiabatic) {
        FactorOptions it = factor;
        it.method = FactorMethod::Iterate;
        it.K = 2;
        chain.push_back(it);
    }
    if (factor.method != FactorMethod::Riccati) {
        FactorOptions ric = factor;
        ric.method = FactorMethod::Riccati;
        chain.push_back(ric);
    }
    std::vector<std::string> tried;
    SolveReport last;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const bool final = i + 1 == chain.size();
        tried.emplace_back(to_string(chain[i].method));
        try {
            SolverContext ctx(family, construct_B(family, chain[i]));
            last = feynman_solve(ctx, f, options);
            last.escalation = tried;
            if (last.converged || final) return last;
        } catch (const Error& e) {
            if (final || e.code() != ErrorCode::NoContraction) throw;
        }
    }
    return last;
}

ResidualReport residual_check(const OperatorFamily& family, const Nodes& u, const Nodes& v, const ModeSource& f,
                              double gamma, double s, int substeps)
{
    const TimeGrid& times = family.times();
    const SpatialGrid& grid = family.grid();
    const int J = times.size();
    const int n = grid.size();
    require(static_cast<int>(u.size()) == J && static_cast<int>(v.size()) == J, ErrorCode::InvalidArgument,
            "trajectory length does not match the time grid");
    const FreePack pack = build_free(family.grid_ptr(), family.mu());
    const Rhs rhs = cauchy_rhs(family, f);
    const double dt = times.step();
    Rk4 rk;
    Eigen::MatrixXcd y(2 * n, 1);
    ResidualReport rep;
    double acc = 0.0;
    for (int j = 0; j + 1 < J; ++j) {
        y.col(0).head(n) = u[j];
        y.col(0).tail(n) = v[j];
        rk.run(rhs, times.node(j), times.node(j + 1), substeps, y);
        const double rho =
            energy_norm_modes(pack, y.col(0).head(n) - u[j + 1], y.col(0).tail(n) - v[j + 1], s) / dt;
        const double w = std::pow(japanese(0.5 * (times.node(j) + times.node(j + 1))), gamma);
        acc += dt * w * w * rho * rho;
        rep.max_defect = std::max(rep.max_defect, rho);
    }
    rep.absolute = std::sqrt(acc);
    rep.source_norm = source_norm(grid, times, f, gamma, s);
    rep.relative = rep.source_norm > 0.0 ? rep.absolute / rep.source_norm : rep.absolute;
    return rep;
}

BoundaryDefects boundary_defects(const FreePack& pack, const CauchyTrajectory& psi)
{
    const SpatialGrid& g = *pack.grid;
    auto wrong = [&](int j, bool minus) {
        const Eigen::VectorXcd u = g.to_modes(psi.u[j]), v = g.to_modes(psi.v[j]);
        const Eigen::VectorXcd wu = pack.omega.cast<cd>().cwiseProduct(u);
        const double total = energy_norm_modes(pack, u, v);
        if (total == 0.0) return 0.0;
        const Eigen::VectorXcd l = (minus ? Eigen::VectorXcd(wu - v) : Eigen::VectorXcd(wu + v)) / std::sqrt(2.0);
        return std::sqrt(g.spacing()) * l.norm() / total;
    };
    const int last = psi.u.size() - 1;
    return {wrong(last, true), wrong(0, false)};
}

double energy_norm_modes(const FreePack& pack, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v, double s)
{
    const SpatialGrid& g = *pack.grid;
    double acc = 0.0;
    for (int l = 0; l < g.size(); ++l) {
        const double w = s == 0.0 ? 1.0 : std::pow(1.0 + g.modes()[l] * g.modes()[l], s);
        acc += w * (pack.omega[l] * pack.omega[l] * std::norm(u[l]) + std::norm(v[l]));
    }
    return std::sqrt(g.spacing() * acc);
}

double source_norm(const SpatialGrid& grid, const TimeGrid& times, const ModeSource& f, double gamma, double s)
{
    double acc = 0.0;
    for (int j = 0; j < times.size(); ++j) {
        const Eigen::VectorXcd fj = f(times.node(j));
        double nj = 0.0;
        for (int l = 0; l < grid.size(); ++l) {
            const double w = s == 0.0 ? 1.0 : std::pow(1.0 + grid.modes()[l] * grid.modes()[l], s);
            nj += w * std::norm(fj[l]);
        }
        acc += times.weights()[j] * std::pow(japanese(times.node(j)), 2 * gamma) * grid.spacing() * nj;
    }
    return std::sqrt(acc);
}

CauchyTrajectory to_trajectory(const SpatialGrid& grid, const TimeGridPtr& times, const Nodes& u, const Nodes& v)
{
    std::vector<GridFunction> pu, pv;
    pu.reserve(u.size());
    pv.reserve(v.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        pu.push_back(grid.from_modes(u[j]));
        pv.push_back(grid.from_modes(v[j]));
    }
    return {SpaceTimeField(times, std::move(pu)), SpaceTimeField(times, std::move(pv))};
}

} // namespace kglab
