#include "kglab/free_theory.hpp"

#include "kglab/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

namespace kglab {

BlockMultiplier BlockMultiplier::identity(int n)
{
    return {Eigen::VectorXcd::Ones(n), Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n),
            Eigen::VectorXcd::Ones(n)};
}

BlockMultiplier BlockMultiplier::zero(int n)
{
    return {Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n),
            Eigen::VectorXcd::Zero(n)};
}

void BlockMultiplier::apply_modes(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v,
                                  Eigen::VectorXcd& out_u, Eigen::VectorXcd& out_v) const
{
    Eigen::VectorXcd nu = a.cwiseProduct(u) + b.cwiseProduct(v);
    out_v = c.cwiseProduct(u) + d.cwiseProduct(v);
    out_u = std::move(nu);
}

CauchyDatum BlockMultiplier::apply(const SpatialGrid& grid, const CauchyDatum& psi) const
{
    Eigen::VectorXcd u, v;
    apply_modes(grid.to_modes(psi.u), grid.to_modes(psi.v), u, v);
    return {grid.from_modes(u), grid.from_modes(v)};
}

BlockMultiplier BlockMultiplier::scaled(cd s) const
{
    return {s * a, s * b, s * c, s * d};
}

double BlockMultiplier::norm() const
{
    double best = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        Eigen::Matrix2cd m;
        m << a[i], b[i], c[i], d[i];
        Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m);
        best = std::max(best, svd.singularValues()[0]);
    }
    return best;
}

BlockMultiplier compose(const BlockMultiplier& x, const BlockMultiplier& y)
{
    return {x.a.cwiseProduct(y.a) + x.b.cwiseProduct(y.c), x.a.cwiseProduct(y.b) + x.b.cwiseProduct(y.d),
            x.c.cwiseProduct(y.a) + x.d.cwiseProduct(y.c), x.c.cwiseProduct(y.b) + x.d.cwiseProduct(y.d)};
}

BlockMultiplier operator+(const BlockMultiplier& x, const BlockMultiplier& y)
{
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
}

BlockMultiplier operator-(const BlockMultiplier& x, const BlockMultiplier& y)
{
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
}

FreePack build_free(GridPtr grid, double mu)
{
    require(mu > 0 && std::isfinite(mu), ErrorCode::InvalidArgument,
            "mass must be positive (massive theory only)");
    const int n = grid->size();
    Eigen::VectorXd omega(n);
    for (int i = 0; i < n; ++i) {
        const double k = grid->modes()[i];
        omega[i] = std::sqrt(k * k + mu * mu);
    }
    const Eigen::VectorXcd w = omega.cast<cd>();
    const Eigen::VectorXcd w2 = w.cwiseProduct(w);
    const Eigen::VectorXcd winv = w.cwiseInverse();
    const Eigen::VectorXcd one = Eigen::VectorXcd::Ones(n);
    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(n);
    return FreePack{
        .grid = grid,
        .mu = mu,
        .omega = omega,
        .A0 = SpatialOperator::multiplier(grid, w2),
        .B0 = SpatialOperator::multiplier(grid, w),
        .H0 = {zero, one, w2, zero},
        .Pp = {0.5 * one, 0.5 * winv, 0.5 * w, 0.5 * one},
        .Pm = {0.5 * one, -0.5 * winv, -0.5 * w, 0.5 * one},
    };
}

BlockMultiplier free_evolution(const FreePack& pack, double t)
{
    const Eigen::Index n = pack.omega.size();
    BlockMultiplier u = BlockMultiplier::zero(static_cast<int>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = pack.omega[i];
        const double c = std::cos(w * t);
        const double s = std::sin(w * t);
        u.a[i] = c;
        u.b[i] = cd(0.0, s / w);
        u.c[i] = cd(0.0, w * s);
        u.d[i] = c;
    }
    return u;
}

cd free_feynman_mode_kernel(double omega, double t)
{
    return std::polar(1.0, omega * std::abs(t)) / cd(0.0, 2.0 * omega);
}

cd free_retarded_mode_kernel(double omega, double t)
{
    return t > 0 ? cd(std::sin(omega * t) / omega, 0.0) : cd(0.0, 0.0);
}

cd free_advanced_mode_kernel(double omega, double t)
{
    return t < 0 ? cd(-std::sin(omega * t) / omega, 0.0) : cd(0.0, 0.0);
}

BlockMultiplier free_diag_feynman_kernel(const FreePack& pack, double t)
{
    const double fp = t > 0 ? 1.0 : (t < 0 ? 0.0 : 0.5);
    const double fm = t < 0 ? 1.0 : (t > 0 ? 0.0 : 0.5);
    const Eigen::Index n = pack.omega.size();
    Eigen::VectorXcd ep(n), em(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ep[i] = cd(0.0, fp) * std::polar(1.0, pack.omega[i] * t);
        em[i] = cd(0.0, -fm) * std::polar(1.0, -pack.omega[i] * t);
    }
    auto scale = [](const BlockMultiplier& m, const Eigen::VectorXcd& s) {
        return BlockMultiplier{m.a.cwiseProduct(s), m.b.cwiseProduct(s), m.c.cwiseProduct(s),
                               m.d.cwiseProduct(s)};
    };
    return scale(pack.Pp, ep) + scale(pack.Pm, em);
}

void gauss_legendre(std::vector<double>& x, std::vector<double>& w)
{
    using rule = boost::math::quadrature::gauss<double, 8>;
    x.clear();
    w.clear();
    const auto& a = rule::abscissa();
    const auto& wt = rule::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        x.push_back(-a[i]);
        w.push_back(wt[i]);
        x.push_back(a[i]);
        w.push_back(wt[i]);
    }
}

namespace {

struct ModePair {
    Eigen::VectorXcd u, v;
};

// Mode coefficients of Pp (or Pm) applied to a datum, multiplied by a
// per-mode phase.
void accumulate(const BlockMultiplier& proj, const Eigen::VectorXcd& phase, double weight,
                const Eigen::VectorXcd& gu, const Eigen::VectorXcd& gv, ModePair& acc)
{
    Eigen::VectorXcd pu, pv;
    proj.apply_modes(gu, gv, pu, pv);
    acc.u += weight * phase.cwiseProduct(pu);
    acc.v += weight * phase.cwiseProduct(pv);
}

Eigen::VectorXcd phases(const Eigen::VectorXd& omega, double t)
{
    Eigen::VectorXcd e(omega.size());
    for (Eigen::Index i = 0; i < omega.size(); ++i) e[i] = std::polar(1.0, omega[i] * t);
    return e;
}

// Assemble psi(t_j) = i e^{i w t_j} Fplus_j - i e^{-i w t_j} Fminus_j.
CauchyTrajectory assemble(const FreePack& pack, const TimeGridPtr& times,
                          const std::vector<ModePair>& fplus, const std::vector<ModePair>& fminus)
{
    const SpatialGrid& g = *pack.grid;
    const int J = times->size();
    CauchyTrajectory out{SpaceTimeField(times, g.size()), SpaceTimeField(times, g.size())};
    const cd I(0.0, 1.0);
    for (int j = 0; j < J; ++j) {
        const double t = times->node(j);
        const Eigen::VectorXcd ep = phases(pack.omega, t);
        const Eigen::VectorXcd em = ep.conjugate();
        Eigen::VectorXcd u = I * ep.cwiseProduct(fplus[j].u) - I * em.cwiseProduct(fminus[j].u);
        Eigen::VectorXcd v = I * ep.cwiseProduct(fplus[j].v) - I * em.cwiseProduct(fminus[j].v);
        out.u[j] = g.from_modes(u);
        out.v[j] = g.from_modes(v);
    }
    return out;
}

} // namespace

CauchyTrajectory free_diag_feynman_apply(const FreePack& pack, const TimeGridPtr& times,
                                         const CauchySource& source)
{
    const SpatialGrid& g = *pack.grid;
    const int n = g.size();
    const int J = times->size();
    std::vector<double> gx, gw;
    gauss_legendre(gx, gw);
    const int nq = static_cast<int>(gx.size());

    // Interval contributions, then prefix (past) and suffix (future) sums.
    std::vector<ModePair> plus(J - 1), minus(J - 1);
    for (int j = 0; j + 1 < J; ++j) {
        const double a = times->node(j), b = times->node(j + 1);
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        plus[j] = {Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
        minus[j] = plus[j];
        for (int q = 0; q < nq; ++q) {
            const double s = mid + half * gx[q];
            const CauchyDatum gs = source(s);
            const Eigen::VectorXcd gu = g.to_modes(gs.u);
            const Eigen::VectorXcd gv = g.to_modes(gs.v);
            const Eigen::VectorXcd e = phases(pack.omega, s);
            accumulate(pack.Pp, e.conjugate(), half * gw[q], gu, gv, plus[j]);
            accumulate(pack.Pm, e, half * gw[q], gu, gv, minus[j]);
        }
    }
    std::vector<ModePair> fplus(J), fminus(J);
    fplus[0] = {Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
    for (int j = 1; j < J; ++j)
        fplus[j] = {fplus[j - 1].u + plus[j - 1].u, fplus[j - 1].v + plus[j - 1].v};
    fminus[J - 1] = {Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
    for (int j = J - 2; j >= 0; --j)
        fminus[j] = {fminus[j + 1].u + minus[j].u, fminus[j + 1].v + minus[j].v};
    return assemble(pack, times, fplus, fminus);
}

CauchyTrajectory free_diag_feynman_apply(const FreePack& pack, const CauchyTrajectory& source)
{
    const SpatialGrid& g = *pack.grid;
    const int n = g.size();
    const TimeGridPtr& times = source.u.time_grid();
    const int J = times->size();
    const double dt = times->step();
    std::vector<Eigen::VectorXcd> gu(J), gv(J);
    for (int j = 0; j < J; ++j) {
        gu[j] = g.to_modes(source.u[j]);
        gv[j] = g.to_modes(source.v[j]);
    }
    // Trapezoid over [-T, t_j] and [t_j, T] separately; the kernel jumps at s = t_j.
    std::vector<ModePair> fplus(J), fminus(J);
    ModePair run{Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
    ModePair prev = run;
    for (int j = 0; j < J; ++j) {
        ModePair term{Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
        accumulate(pack.Pp, phases(pack.omega, -times->node(j)), 1.0, gu[j], gv[j], term);
        if (j > 0) {
            run.u += 0.5 * dt * (prev.u + term.u);
            run.v += 0.5 * dt * (prev.v + term.v);
        }
        fplus[j] = run;
        prev = term;
    }
    run = {Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
    for (int j = J - 1; j >= 0; --j) {
        ModePair term{Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
        accumulate(pack.Pm, phases(pack.omega, times->node(j)), 1.0, gu[j], gv[j], term);
        if (j < J - 1) {
            run.u += 0.5 * dt * (prev.u + term.u);
            run.v += 0.5 * dt * (prev.v + term.v);
        }
        fminus[j] = run;
        prev = term;
    }
    return assemble(pack, times, fplus, fminus);
}

} // namespace kglab
