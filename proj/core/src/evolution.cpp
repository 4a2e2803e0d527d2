#include "kglab/evolution.hpp"

#include "kglab/error.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>

namespace kglab {

void Rk4::step(const Rhs& f, double t, double h, Eigen::MatrixXcd& y)
{
    f(t, y, k1_);
    tmp_ = y + (0.5 * h) * k1_;
    f(t + 0.5 * h, tmp_, k2_);
    tmp_ = y + (0.5 * h) * k2_;
    f(t + 0.5 * h, tmp_, k3_);
    tmp_ = y + h * k3_;
    f(t + h, tmp_, k4_);
    y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

void Rk4::run(const Rhs& f, double s, double t, int steps, Eigen::MatrixXcd& y)
{
    const double h = (t - s) / steps;
    for (int i = 0; i < steps; ++i) step(f, s + i * h, h, y);
}

void LawsonRk4::set_step(double h)
{
    if (h == h_ && e_full_.size() == l_.size()) return;
    h_ = h;
    e_half_ = (0.5 * h * l_).array().exp();
    e_full_ = (h * l_).array().exp();
}

void LawsonRk4::step(const Rhs& n, double t, double h, Eigen::MatrixXcd& y)
{
    set_step(h);
    const auto eh = e_half_.asDiagonal();
    const auto ef = e_full_.asDiagonal();
    n(t, y, k1_);
    tmp_ = eh * (y + (0.5 * h) * k1_);
    n(t + 0.5 * h, tmp_, k2_);
    ey_ = eh * y;
    tmp_ = ey_ + (0.5 * h) * k2_;
    n(t + 0.5 * h, tmp_, k3_);
    tmp_ = ef * y + h * (eh * k3_);
    n(t + h, tmp_, k4_);
    tmp_ = ef * (y + (h / 6.0) * k1_);
    tmp_ += (h / 3.0) * (eh * (k2_ + k3_));
    y = tmp_ + (h / 6.0) * k4_;
}

void LawsonRk4::run(const Rhs& n, double s, double t, int steps, Eigen::MatrixXcd& y)
{
    const double h = (t - s) / steps;
    for (int i = 0; i < steps; ++i) step(n, s + i * h, h, y);
}

void validate(const StepperSpec& spec)
{
    require(spec.order == 4, ErrorCode::InvalidArgument, "only the order-4 stepper is implemented");
    require(spec.tol > 0 && spec.max_step > 0 && spec.max_steps > 0, ErrorCode::InvalidArgument,
            "stepper tolerances must be positive");
}

namespace {

/// Stage times repeat (t + h/2 twice, t + h as the next t); keeps the last
/// two coefficient slices.
class SliceCache {
public:
    explicit SliceCache(const OperatorFamily& family) : family_(family)
    {
        slots_[0].t = slots_[1].t = std::numeric_limits<double>::quiet_NaN();
    }

    const OperatorFamily::Slice& at(double t)
    {
        for (const auto& s : slots_)
            if (s.t == t) return s;
        auto& slot = slots_[next_];
        next_ = 1 - next_;
        slot = family_.slice(t);
        return slot;
    }

private:
    const OperatorFamily& family_;
    std::array<OperatorFamily::Slice, 2> slots_;
    int next_ = 0;
};

} // namespace

Rhs cauchy_rhs(const OperatorFamily& family, ModeSource f)
{
    const int n = family.grid().size();
    auto cache = std::make_shared<SliceCache>(family);
    return [&family, f = std::move(f), n, cache](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
        const cd I(0.0, 1.0);
        dy.resize(y.rows(), y.cols());
        Eigen::MatrixXcd au;
        family.apply_modes(cache->at(t), y.topRows(n), au);
        dy.topRows(n) = I * y.bottomRows(n);
        dy.bottomRows(n) = I * au;
        if (f) dy.bottomRows(n).colwise() -= I * f(t);
    };
}

void to_energy(const Eigen::VectorXd& omega, const Eigen::MatrixXcd& uv, Eigen::MatrixXcd& x)
{
    const Eigen::Index n = omega.size();
    const Eigen::MatrixXcd wu = omega.cast<cd>().asDiagonal() * uv.topRows(n);
    x.resize(uv.rows(), uv.cols());
    x.topRows(n) = (wu + uv.bottomRows(n)) / std::sqrt(2.0);
    x.bottomRows(n) = (wu - uv.bottomRows(n)) / std::sqrt(2.0);
}

void from_energy(const Eigen::VectorXd& omega, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& uv)
{
    const Eigen::Index n = omega.size();
    uv.resize(x.rows(), x.cols());
    uv.topRows(n) = omega.cwiseInverse().cast<cd>().asDiagonal() * (x.topRows(n) + x.bottomRows(n)) / std::sqrt(2.0);
    uv.bottomRows(n) = (x.topRows(n) - x.bottomRows(n)) / std::sqrt(2.0);
}

Rhs cauchy_energy_perturbation_rhs(const OperatorFamily& family, const Eigen::VectorXd& omega, ModeSource f)
{
    const Eigen::Index n = omega.size();
    auto cache = std::make_shared<SliceCache>(family);
    const Eigen::VectorXcd scale = (omega.cwiseInverse() / std::sqrt(2.0)).cast<cd>();
    return [&family, f = std::move(f), n, cache, scale](double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& dx) {
        const cd I(0.0, 1.0);
        const Eigen::MatrixXcd u = scale.asDiagonal() * (x.topRows(n) + x.bottomRows(n));
        Eigen::MatrixXcd w;
        family.apply_perturbation_modes(cache->at(t), u, w);
        if (f) w.colwise() -= f(t);
        w *= I / std::sqrt(2.0);
        dx.resize(x.rows(), x.cols());
        dx.topRows(n) = w;
        dx.bottomRows(n) = -w;
    };
}

Eigen::VectorXcd cauchy_energy_linear_part(const Eigen::VectorXd& omega)
{
    const cd I(0.0, 1.0);
    const Eigen::Index n = omega.size();
    Eigen::VectorXcd l(2 * n);
    l.head(n) = I * omega.cast<cd>();
    l.tail(n) = -I * omega.cast<cd>();
    return l;
}

Rhs diagonal_rhs(const DiagonalGenerator& gen, Component c, ModeSource g)
{
    return [&gen, c, g = std::move(g)](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
        const cd I(0.0, 1.0);
        if (c == Component::P)
            gen.apply_p(t, y, dy);
        else
            gen.apply_q(t, y, dy);
        if (g) dy.colwise() += g(t);
        dy *= I;
    };
}

Rhs diagonal_perturbation_rhs(const DiagonalGenerator& gen, Component c, const Eigen::VectorXd& omega,
                               ModeSource g)
{
    return [&gen, c, &omega, g = std::move(g)](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
        const cd I(0.0, 1.0);
        if (c == Component::P) {
            gen.apply_p(t, y, dy);
            dy -= omega.cast<cd>().asDiagonal() * y;
        } else {
            gen.apply_q(t, y, dy);
            dy += omega.cast<cd>().asDiagonal() * y;
        }
        if (g) dy.colwise() += g(t);
        dy *= I;
    };
}

Eigen::VectorXcd diagonal_linear_part(Component c, const Eigen::VectorXd& omega)
{
    const cd I(0.0, 1.0);
    return (c == Component::P ? I : -I) * omega.cast<cd>();
}

Eigen::MatrixXcd integrate_controlled(const Rhs& f, const Eigen::MatrixXcd& y0, double s, double t,
                                      const StepperSpec& spec, EvolutionInfo* info)
{
    validate(spec);
    if (s == t) {
        if (info) *info = {};
        return y0;
    }
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(t - s) / spec.max_step)));
    Rk4 rk;
    Eigen::MatrixXcd coarse = y0;
    rk.run(f, s, t, n, coarse);
    for (;;) {
        require(2L * n <= spec.max_steps, ErrorCode::ToleranceExceeded,
                "step count limit reached before the tolerance was met");
        Eigen::MatrixXcd fine = y0;
        rk.run(f, s, t, 2 * n, fine);
        const double scale = std::max(fine.norm(), 1e-300);
        const double est = (fine - coarse).norm() / 15.0 / scale;
        if (est <= spec.tol) {
            if (info) *info = {2 * n, est};
            return fine;
        }
        n *= 2;
        coarse = std::move(fine);
    }
}

CauchyDatum evolve_cauchy(const OperatorFamily& family, const CauchyDatum& psi, double s, double t,
                          const StepperSpec& spec, EvolutionInfo* info)
{
    const SpatialGrid& g = family.grid();
    const int n = g.size();
    Eigen::MatrixXcd y(2 * n, 1);
    y.col(0).head(n) = g.to_modes(psi.u);
    y.col(0).tail(n) = g.to_modes(psi.v);
    const Eigen::MatrixXcd out = integrate_controlled(cauchy_rhs(family), y, s, t, spec, info);
    return {g.from_modes(Eigen::VectorXcd(out.col(0).head(n))), g.from_modes(Eigen::VectorXcd(out.col(0).tail(n)))};
}

DiagonalDatum evolve_diag(const DiagonalGenerator& gen, const SpatialGrid& grid, const DiagonalDatum& phi,
                          double s, double t, const StepperSpec& spec, EvolutionInfo* info)
{
    EvolutionInfo ip, iq;
    const Eigen::MatrixXcd p = integrate_controlled(diagonal_rhs(gen, Component::P),
                                                    Eigen::MatrixXcd(grid.to_modes(phi.p)), s, t, spec, &ip);
    const Eigen::MatrixXcd q = integrate_controlled(diagonal_rhs(gen, Component::Q),
                                                    Eigen::MatrixXcd(grid.to_modes(phi.q)), s, t, spec, &iq);
    if (info) *info = {std::max(ip.steps, iq.steps), std::max(ip.error_estimate, iq.error_estimate)};
    return {grid.from_modes(Eigen::VectorXcd(p.col(0))), grid.from_modes(Eigen::VectorXcd(q.col(0)))};
}

Eigen::MatrixXcd propagator_matrix(const BlockEvolver& evolver, int dim, double s, double t)
{
    require(dim <= 2 * kPropagatorCap, ErrorCode::SizeCap, "dense propagators are capped at N <= 256");
    return evolver(Eigen::MatrixXcd::Identity(dim, dim), s, t);
}

BlockEvolver cauchy_evolver(const OperatorFamily& family, const StepperSpec& spec)
{
    return [&family, spec](const Eigen::MatrixXcd& y, double s, double t) {
        return integrate_controlled(cauchy_rhs(family), y, s, t, spec);
    };
}

BlockEvolver diagonal_evolver(const DiagonalGenerator& gen, const StepperSpec& spec)
{
    return [&gen, spec](const Eigen::MatrixXcd& y, double s, double t) {
        const Eigen::Index n = y.rows() / 2;
        Eigen::MatrixXcd out(y.rows(), y.cols());
        out.topRows(n) = integrate_controlled(diagonal_rhs(gen, Component::P), y.topRows(n), s, t, spec);
        out.bottomRows(n) = integrate_controlled(diagonal_rhs(gen, Component::Q), y.bottomRows(n), s, t, spec);
        return out;
    };
}

std::vector<Eigen::MatrixXcd> sweep_nodes(const Rhs& f, Eigen::MatrixXcd y0, const TimeGrid& grid,
                                          int j0, int j1, int m)
{
    const int dir = j1 >= j0 ? 1 : -1;
    std::vector<Eigen::MatrixXcd> states;
    states.reserve(std::abs(j1 - j0) + 1);
    states.push_back(y0);
    Rk4 rk;
    for (int j = j0; j != j1; j += dir) {
        rk.run(f, grid.node(j), grid.node(j + dir), m, y0);
        states.push_back(y0);
    }
    return states;
}

SweepResult sweep_controlled(const Rhs& f, const Eigen::MatrixXcd& y0, const TimeGrid& grid, int j0, int j1,
                             const StepperSpec& spec, int m0)
{
    validate(spec);
    int m = std::max(1, m0);
    std::vector<Eigen::MatrixXcd> coarse = sweep_nodes(f, y0, grid, j0, j1, m);
    const long intervals = std::max(1, std::abs(j1 - j0));
    for (;;) {
        require(2L * m * intervals <= spec.max_steps, ErrorCode::ToleranceExceeded,
                "sweep step limit reached before the tolerance was met");
        std::vector<Eigen::MatrixXcd> fine = sweep_nodes(f, y0, grid, j0, j1, 2 * m);
        double diff = 0.0, scale = 1e-300;
        for (std::size_t i = 0; i < fine.size(); ++i) {
            diff = std::max(diff, (fine[i] - coarse[i]).norm());
            scale = std::max(scale, fine[i].norm());
        }
        const double est = diff / 15.0 / scale;
        if (est <= spec.tol) return {std::move(fine), 2 * m, est};
        m *= 2;
        coarse = std::move(fine);
    }
}

int initial_substeps(const TimeGrid& grid, const StepperSpec& spec)
{
    return std::max(1, static_cast<int>(std::ceil(grid.step() / spec.max_step)));
}

CauchySweep cauchy_sweep(const OperatorFamily& family, const CauchyDatum& psi, int j0, const StepperSpec& spec,
                         const ModeSource& f)
{
    validate(spec);
    const TimeGrid& times = family.times();
    const SpatialGrid& grid = family.grid();
    const int J = times.size();
    const int n = grid.size();
    require(j0 >= 0 && j0 < J, ErrorCode::InvalidArgument, "start node outside the time grid");
    const Eigen::VectorXd omega = (family.free_symbol().array().sqrt()).matrix();
    const Rhs rhs = cauchy_energy_perturbation_rhs(family, omega, f);
    const Eigen::VectorXcd l = cauchy_energy_linear_part(omega);
    Eigen::MatrixXcd uv(2 * n, 1), x0;
    uv.col(0).head(n) = grid.to_modes(psi.u);
    uv.col(0).tail(n) = grid.to_modes(psi.v);
    to_energy(omega, uv, x0);

    auto run = [&](int m) {
        std::vector<Eigen::MatrixXcd> x(J);
        x[j0] = x0;
        LawsonRk4 rk(l);
        Eigen::MatrixXcd y = x0;
        for (int j = j0; j + 1 < J; ++j) {
            rk.run(rhs, times.node(j), times.node(j + 1), m, y);
            x[j + 1] = y;
        }
        y = x0;
        for (int j = j0; j > 0; --j) {
            rk.run(rhs, times.node(j), times.node(j - 1), m, y);
            x[j - 1] = y;
        }
        return x;
    };
    int m = initial_substeps(times, spec);
    std::vector<Eigen::MatrixXcd> coarse = run(m);
    double est = 0.0;
    for (;;) {
        require(2L * m * (J - 1) <= spec.max_steps, ErrorCode::ToleranceExceeded,
                "sweep step limit reached before the tolerance was met");
        std::vector<Eigen::MatrixXcd> fine = run(2 * m);
        double d = 0.0, scale = 1e-300;
        for (int j = 0; j < J; ++j) {
            d = std::max(d, (fine[j] - coarse[j]).norm());
            scale = std::max(scale, fine[j].norm());
        }
        m *= 2;
        coarse = std::move(fine);
        est = d / 15.0 / scale;
        if (est <= spec.tol) break;
    }
    std::vector<GridFunction> us, vs;
    us.reserve(J);
    vs.reserve(J);
    for (int j = 0; j < J; ++j) {
        from_energy(omega, coarse[j], uv);
        us.push_back(grid.from_modes(Eigen::VectorXcd(uv.col(0).head(n))));
        vs.push_back(grid.from_modes(Eigen::VectorXcd(uv.col(0).tail(n))));
    }
    return {{SpaceTimeField(family.time_grid(), std::move(us)), SpaceTimeField(family.time_grid(), std::move(vs))}, m, est};
}

} // namespace kglab
