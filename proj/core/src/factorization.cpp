#include "kglab/factorization.hpp"

#include "kglab/error.hpp"
#include "kglab/integrator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace kglab {

OperatorSamples::OperatorSamples(TimeGridPtr times, std::vector<Eigen::MatrixXcd> samples)
    : times_(std::move(times)), samples_(std::move(samples))
{
    require(!samples_.empty(), ErrorCode::InvalidArgument, "operator family needs samples");
    require(samples_.size() == 1 || static_cast<int>(samples_.size()) == times_->size(),
            ErrorCode::InvalidArgument, "one sample per node (or one constant sample) required");
    if (is_constant()) {
        const Eigen::MatrixXcd& m = samples_.front();
        Eigen::MatrixXcd off = m;
        off.diagonal().setZero();
        diagonal_ = off.cwiseAbs().maxCoeff() == 0.0;
    }
}

OperatorSamples::Stencil OperatorSamples::stencil(double t) const
{
    Stencil s;
    if (is_constant()) return s;
    const TimeGrid& g = *times_;
    const int J = g.size();
    const double dt = g.step();
    const int j = g.interval(t);
    if (std::abs(t - g.node(j)) <= 1e-12 * dt) {
        s.first = j;
        return s;
    }
    if (std::abs(t - g.node(j + 1)) <= 1e-12 * dt) {
        s.first = j + 1;
        return s;
    }
    if (J < 4) {
        const double x = (t - g.node(j)) / dt;
        s.first = j;
        s.count = 2;
        s.w = {1.0 - x, x, 0.0, 0.0};
        return s;
    }
    s.first = std::clamp(j - 1, 0, J - 4);
    s.count = 4;
    const double x = (t - g.node(s.first)) / dt;
    for (int l = 0; l < 4; ++l) {
        double w = 1.0;
        for (int m = 0; m < 4; ++m)
            if (m != l) w *= (x - m) / static_cast<double>(l - m);
        s.w[l] = w;
    }
    return s;
}

Eigen::MatrixXcd OperatorSamples::at(double t) const
{
    const Stencil s = stencil(t);
    Eigen::MatrixXcd m = s.w[0] * samples_[s.first];
    for (int l = 1; l < s.count; ++l) m += s.w[l] * samples_[s.first + l];
    return m;
}

void OperatorSamples::apply(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out, bool adjoint) const
{
    if (x.cols() == 1 && !diagonal_) {
        // Keep single columns on the matrix-vector path.
        const Stencil s = stencil(t);
        Eigen::VectorXcd acc(x.rows()), tmp(x.rows());
        const auto col = x.col(0);
        for (int l = 0; l < s.count; ++l) {
            const Eigen::MatrixXcd& m = samples_[s.first + l];
            if (adjoint)
                tmp.noalias() = m.adjoint() * col;
            else
                tmp.noalias() = m * col;
            if (l == 0)
                acc = s.w[0] * tmp;
            else
                acc += s.w[l] * tmp;
        }
        out = acc;
        return;
    }
    if (diagonal_) {
        const Eigen::VectorXcd d = adjoint ? Eigen::VectorXcd(samples_[0].diagonal().conjugate())
                                           : Eigen::VectorXcd(samples_[0].diagonal());
        out = d.asDiagonal() * x;
        return;
    }
    const Stencil s = stencil(t);
    if (adjoint) {
        out.noalias() = s.w[0] * (samples_[s.first].adjoint() * x);
        for (int l = 1; l < s.count; ++l) out.noalias() += s.w[l] * (samples_[s.first + l].adjoint() * x);
    } else {
        out.noalias() = s.w[0] * (samples_[s.first] * x);
        for (int l = 1; l < s.count; ++l) out.noalias() += s.w[l] * (samples_[s.first + l] * x);
    }
}

std::string_view to_string(FactorMethod m) noexcept
{
    switch (m) {
    case FactorMethod::Adiabatic: return "adiabatic";
    case FactorMethod::Iterate: return "iterate";
    case FactorMethod::Riccati: return "riccati";
    }
    return "unknown";
}

FactorMethod parse_factor_method(std::string_view name)
{
    if (name == "adiabatic") return FactorMethod::Adiabatic;
    if (name == "iterate") return FactorMethod::Iterate;
    if (name == "riccati") return FactorMethod::Riccati;
    fail(ErrorCode::InvalidArgument, "unknown factorization method '" + std::string(name) + "'");
}

Eigen::MatrixXcd node_derivative(const OperatorSamples& b, int j, int stride)
{
    const Eigen::Index n = b.dim();
    if (b.is_constant()) return Eigen::MatrixXcd::Zero(n, n);
    const int J = b.times().size();
    const double h = stride * b.times().step();
    require(J > 4 * stride, ErrorCode::InvalidArgument, "too few nodes for the derivative stencil");
    auto f = [&](int i) -> const Eigen::MatrixXcd& { return b.node(j + i * stride); };
    if (j - 2 * stride >= 0 && j + 2 * stride < J)
        return (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h);
    if (j - stride < 0)
        return (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * h);
    if (j - 2 * stride < 0)
        return (-3.0 * f(-1) - 10.0 * f(0) + 18.0 * f(1) - 6.0 * f(2) + f(3)) / (12.0 * h);
    if (j + stride >= J)
        return (25.0 * f(0) - 48.0 * f(-1) + 36.0 * f(-2) - 16.0 * f(-3) + 3.0 * f(-4)) / (12.0 * h);
    return (3.0 * f(1) + 10.0 * f(0) - 18.0 * f(-1) + 6.0 * f(-2) - f(-3)) / (12.0 * h);
}

double norm_estimate(const Eigen::MatrixXcd& m, int iterations)
{
    const Eigen::Index n = m.cols();
    if (n == 0) return 0.0;
    // Deterministic start with components in every direction.
    Eigen::VectorXcd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = cd(1.0 + 0.37 * std::sin(1.3 * i), 0.21 * std::cos(0.7 * i));
    x.normalize();
    double s = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXcd y = m * x;
        const Eigen::VectorXcd z = m.adjoint() * y;
        const double nz = z.norm();
        s = y.norm();
        if (nz == 0.0) return 0.0;
        x = z / nz;
    }
    return std::max(s, (m * x).norm());
}

Eigen::MatrixXcd enforce_floor(const Eigen::MatrixXcd& b, double floor, bool* applied, double* min_eig)
{
    const Eigen::MatrixXcd h = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXd& lam = es.eigenvalues();
    if (min_eig) *min_eig = std::max(lam[0], floor);
    if (lam[0] >= floor) {
        if (applied) *applied = false;
        if (min_eig) *min_eig = lam[0];
        return b;
    }
    if (applied) *applied = true;
    const Eigen::VectorXd raised = lam.cwiseMax(floor);
    const Eigen::MatrixXcd& v = es.eigenvectors();
    const Eigen::MatrixXcd k = 0.5 * (b - b.adjoint());
    return v * raised.cast<cd>().asDiagonal() * v.adjoint() + k;
}

OperatorSamples enforce_floor(const OperatorSamples& b, double floor, bool* applied)
{
    bool any = false;
    std::vector<Eigen::MatrixXcd> out;
    out.reserve(b.samples().size());
    for (const auto& m : b.samples()) {
        bool a = false;
        out.push_back(enforce_floor(m, floor, &a));
        any = any || a;
    }
    if (applied) *applied = any;
    return OperatorSamples(b.time_grid(), std::move(out));
}

namespace {

std::vector<Eigen::MatrixXcd> adiabatic_samples(const OperatorFamily& family, double eps)
{
    const TimeGrid& g = family.times();
    std::vector<Eigen::MatrixXcd> b(g.size());
    for (int j = 0; j < g.size(); ++j) b[j] = principal_sqrt(family.mode_matrix(g.node(j)), eps);
    return b;
}

std::vector<Eigen::MatrixXcd> iterate_samples(const OperatorFamily& family, int K, double eps)
{
    const TimeGrid& g = family.times();
    auto current = std::make_shared<OperatorSamples>(family.time_grid(), adiabatic_samples(family, eps));
    for (int k = 0; k < K; ++k) {
        std::vector<Eigen::MatrixXcd> next(g.size());
        for (int j = 0; j < g.size(); ++j) {
            const Eigen::MatrixXcd m = family.mode_matrix(g.node(j)) - cd(0.0, 1.0) * node_derivative(*current, j);
            try {
                next[j] = principal_sqrt(m, eps);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::SpectrumTooClose) throw;
                fail(ErrorCode::SqrtBranch, "iterate " + std::to_string(k + 1) + ": " + e.what());
            }
        }
        current = std::make_shared<OperatorSamples>(family.time_grid(), std::move(next));
    }
    return current->samples();
}

// B' = -i (A - B^2) forward from sqrt(A(-T)); returns samples on the
// substep grid with spacing dt / substeps.
OperatorSamples riccati_fine_samples(const OperatorFamily& family, int substeps, double guard, double eps)
{
    const TimeGrid& g = family.times();
    const int fine_nodes = (g.size() - 1) * substeps + 1;
    auto fine = make_time_grid(g.half_length(), fine_nodes);
    std::vector<Eigen::MatrixXcd> out(fine_nodes);
    Eigen::MatrixXcd b = principal_sqrt(family.mode_matrix(-g.half_length()), eps);
    out[0] = b;
    const cd mi(0.0, -1.0);
    Rhs f = [&](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
        dy = family.mode_matrix(t);
        dy.noalias() -= y * y;
        dy *= mi;
    };
    Rk4 rk;
    for (int n = 1; n < fine_nodes; ++n) {
        rk.step(f, fine->node(n - 1), fine->step(), b);
        require(b.allFinite() && norm_estimate(b, 8) <= guard, ErrorCode::RiccatiBlowup,
                "Riccati solution exceeded the blow-up guard at t = " + std::to_string(fine->node(n)));
        out[n] = b;
    }
    return OperatorSamples(fine, std::move(out));
}

Eigen::MatrixXcd bracket_weight(const Eigen::VectorXd& k, double power)
{
    Eigen::VectorXd w(k.size());
    for (Eigen::Index i = 0; i < k.size(); ++i) w[i] = std::pow(1.0 + k[i] * k[i], 0.5 * power);
    return w.cast<cd>().asDiagonal();
}

void finish_diagnostics(const OperatorFamily& family, FactorizationResult& r)
{
    const TimeGrid& g = family.times();
    const int J = g.size();
    const double T = g.half_length();
    r.remainder_norm.assign(J, 0.0);
    r.a_norm.assign(J, 0.0);
    r.max_relative_remainder = 0.0;
    for (int j = 0; j < J; ++j) {
        r.a_norm[j] = family.is_free() ? family.free_symbol().maxCoeff()
                                       : norm_estimate(family.mode_matrix(g.node(j)));
        r.remainder_norm[j] = r.R->is_constant() && r.R->node(0).cwiseAbs().maxCoeff() == 0.0
                                  ? 0.0
                                  : norm_estimate(r.R->node(j));
        r.max_relative_remainder = std::max(r.max_relative_remainder, r.remainder_norm[j] / r.a_norm[j]);
    }
    // Decay fit on t in [T/4, T], log-spaced nodes.
    r.fit_t.clear();
    r.fit_norm.clear();
    const Eigen::MatrixXcd up = bracket_weight(family.grid().modes(), 2.0);
    const Eigen::MatrixXcd down = bracket_weight(family.grid().modes(), -1.0);
    r.smoothing_proxy = 0.0;
    int last = -1;
    const int samples = 8;
    for (int i = 0; i < samples; ++i) {
        const double t = 0.25 * T * std::pow(4.0, static_cast<double>(i) / (samples - 1));
        const int j = g.nearest(t);
        if (j == last || g.node(j) <= 0.0) continue;
        last = j;
        const Eigen::MatrixXcd& rj = r.R->node(j);
        r.fit_t.push_back(g.node(j));
        r.fit_norm.push_back(spectral_norm(rj));
        r.smoothing_proxy = std::max(r.smoothing_proxy, spectral_norm(up * rj * down));
    }
    r.remainder_fit = r.fit_t.size() >= 2 ? fit_power_law(r.fit_t, r.fit_norm) : PowerFit{};
    // Observed order of the time-derivative stencil.
    r.fd_order = 4.0;
    if (!r.B->is_constant() && J > 17) {
        const int j = std::clamp(g.nearest(0.25 * T), 8, J - 9);
        const Eigen::MatrixXcd d1 = node_derivative(*r.B, j, 1);
        const Eigen::MatrixXcd d2 = node_derivative(*r.B, j, 2);
        const Eigen::MatrixXcd d4 = node_derivative(*r.B, j, 4);
        const double e12 = (d1 - d2).norm(), e24 = (d2 - d4).norm();
        if (e12 > 0.0 && e24 > 0.0) r.fd_order = std::log2(e24 / e12);
    }
}

} // namespace

FactorizationResult construct_B(const OperatorFamily& family, const FactorOptions& options)
{
    require(options.K >= 0, ErrorCode::InvalidArgument, "K must be non-negative");
    require(options.riccati_substeps >= 1 && options.riccati_max_substeps >= options.riccati_substeps,
            ErrorCode::InvalidArgument, "riccati substeps must be >= 1 and below the maximum");
    require(options.riccati_tol > 0.0, ErrorCode::InvalidArgument, "riccati_tol must be positive");
    const TimeGridPtr& times = family.time_grid();
    const TimeGrid& g = *times;
    const int n = family.grid().size();
    FactorizationResult r;
    r.method = options.method;
    r.K = options.method == FactorMethod::Iterate ? options.K : 0;
    r.floor = options.floor > 0.0 ? options.floor : 0.5 * family.mu();

    if (family.is_free()) {
        Eigen::MatrixXcd b0 = family.free_symbol().cwiseSqrt().cast<cd>().asDiagonal();
        r.B = std::make_shared<OperatorSamples>(times, std::vector<Eigen::MatrixXcd>{b0});
        r.R = std::make_shared<OperatorSamples>(times,
                                                std::vector<Eigen::MatrixXcd>{Eigen::MatrixXcd::Zero(n, n)});
        r.min_hermitian = family.mu();
        require(r.min_hermitian >= r.floor, ErrorCode::FloorMissing, "floor exceeds the free mass");
        finish_diagnostics(family, r);
        return r;
    }

    std::vector<Eigen::MatrixXcd> b;
    std::shared_ptr<const OperatorSamples> fine;
    switch (options.method) {
    case FactorMethod::Adiabatic:
        b = adiabatic_samples(family, options.sqrt_floor_eps);
        break;
    case FactorMethod::Iterate:
        b = iterate_samples(family, options.K, options.sqrt_floor_eps);
        break;
    case FactorMethod::Riccati: {
        const double guard = options.blowup_factor * std::sqrt(family.free_symbol().maxCoeff());
        try {
            // The measured remainder is the integration error, fourth order in
            // the substep; refine until it meets the tolerance.
            for (int m = options.riccati_substeps;; m *= 2) {
                fine = std::make_shared<OperatorSamples>(
                    riccati_fine_samples(family, m, guard, options.sqrt_floor_eps));
                r.riccati_substeps = m;
                double worst = 0.0;
                for (int j = 0; j < g.size(); ++j) {
                    const Eigen::MatrixXcd& bj = fine->node(j * m);
                    const Eigen::MatrixXcd a = family.mode_matrix(g.node(j));
                    const Eigen::MatrixXcd rem = a - bj * bj - cd(0.0, 1.0) * node_derivative(*fine, j * m);
                    worst = std::max(worst, norm_estimate(rem) / norm_estimate(a));
                }
                if (worst <= options.riccati_tol || 2 * m > options.riccati_max_substeps) break;
            }
            b.resize(g.size());
            for (int j = 0; j < g.size(); ++j) b[j] = fine->node(j * r.riccati_substeps);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RiccatiBlowup || !options.riccati_fallback) throw;
            r.method = FactorMethod::Iterate;
            r.K = options.K;
            r.riccati_fell_back = true;
            b = iterate_samples(family, options.K, options.sqrt_floor_eps);
        }
        break;
    }
    }

    // Floor the Hermitian part; the remainder absorbs the modification.
    r.min_hermitian = std::numeric_limits<double>::infinity();
    for (auto& m : b) {
        bool applied = false;
        double lo = 0.0;
        m = enforce_floor(m, r.floor, &applied, &lo);
        if (applied) r.floor_applied = true;
        r.min_hermitian = std::min(r.min_hermitian, lo);
    }
    if (r.floor_applied) fine.reset();
    r.B = std::make_shared<OperatorSamples>(times, std::move(b));

    std::vector<Eigen::MatrixXcd> rem(g.size());
    const cd I(0.0, 1.0);
    for (int j = 0; j < g.size(); ++j) {
        const Eigen::MatrixXcd& bj = r.B->node(j);
        const Eigen::MatrixXcd db = fine ? node_derivative(*fine, j * r.riccati_substeps)
                                         : node_derivative(*r.B, j);
        rem[j] = family.mode_matrix(g.node(j)) - bj * bj - I * db;
    }
    r.R = std::make_shared<OperatorSamples>(times, std::move(rem));
    finish_diagnostics(family, r);
    return r;
}

Transform::Transform(SamplesPtr b, double floor)
    : b_(std::move(b))
{
    std::vector<Eigen::MatrixXcd> sinv;
    sinv.reserve(b_->samples().size());
    for (const auto& m : b_->samples()) {
        const Eigen::MatrixXcd s = m + m.adjoint();
        const Eigen::Index n = s.rows();
        Eigen::LLT<Eigen::MatrixXcd> shifted(s - floor * Eigen::MatrixXcd::Identity(n, n));
        require(shifted.info() == Eigen::Success, ErrorCode::FloorMissing,
                "Hermitian part of B falls below floor/2; enforce the floor first");
        Eigen::LLT<Eigen::MatrixXcd> llt(s);
        sinv.push_back(llt.solve(Eigen::MatrixXcd::Identity(n, n)));
    }
    s_inv_ = std::make_shared<OperatorSamples>(b_->time_grid(), std::move(sinv));
}

void Transform::forward_modes(int j, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v,
                              Eigen::VectorXcd& p, Eigen::VectorXcd& q) const
{
    const Eigen::MatrixXcd& b = b_->node(j);
    p = b * u + v;
    q = v - b.adjoint() * u;
}

void Transform::inverse_modes(int j, const Eigen::VectorXcd& p, const Eigen::VectorXcd& q,
                              Eigen::VectorXcd& u, Eigen::VectorXcd& v) const
{
    u = s_inv_->node(j) * (p - q);
    v = p - b_->node(j) * u;
}

DiagonalDatum Transform::forward(int j, const CauchyDatum& psi, const SpatialGrid& grid) const
{
    Eigen::VectorXcd p, q;
    forward_modes(j, grid.to_modes(psi.u), grid.to_modes(psi.v), p, q);
    return {grid.from_modes(p), grid.from_modes(q)};
}

CauchyDatum Transform::inverse(int j, const DiagonalDatum& phi, const SpatialGrid& grid) const
{
    Eigen::VectorXcd u, v;
    inverse_modes(j, grid.to_modes(phi.p), grid.to_modes(phi.q), u, v);
    return {grid.from_modes(u), grid.from_modes(v)};
}

Transform build_transform(const FactorizationResult& f)
{
    return Transform(f.B, f.floor);
}

DiagonalGenerator diagonal_generator(const FactorizationResult& f)
{
    return DiagonalGenerator(f.B);
}

} // namespace kglab
