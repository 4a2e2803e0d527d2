#include "kglab/model.hpp"

#include "kglab/error.hpp"

#include <cmath>

namespace kglab {

void validate(const PerturbationSpec& spec)
{
    require(std::isfinite(spec.delta) && spec.delta > 1.0, ErrorCode::InvalidArgument,
            "short-range requires δ>1");
    require(std::isfinite(spec.sigma) && spec.sigma > 0.0, ErrorCode::InvalidArgument,
            "sigma must be positive");
    require(std::isfinite(spec.c_V) && std::isfinite(spec.c_b), ErrorCode::InvalidArgument,
            "amplitudes must be finite");
    require(!spec.principal || std::abs(spec.c_b) < 1.0, ErrorCode::EllipticityLost,
            "|c_b| must be below 1 so that 1+b stays positive");
}

double coefficient(const PerturbationSpec& spec, CoefficientKind kind, double t, double x)
{
    const bool on = kind == CoefficientKind::V ? spec.potential : spec.principal;
    const double c = kind == CoefficientKind::V ? spec.c_V : spec.c_b;
    if (!on || c == 0.0) return 0.0;
    const double ts = t / spec.sigma, xs = x / spec.sigma;
    double value = c * std::pow(1.0 + ts * ts + xs * xs, -0.5 * spec.delta);
    if (spec.taper_radius > 0.0) {
        const double r = x / spec.taper_radius;
        const double r2 = r * r;
        value *= std::exp(-r2 * r2 * r2 * r2);
    }
    return value;
}

OperatorFamily::OperatorFamily(GridPtr grid, TimeGridPtr times, double mu, PerturbationSpec spec)
    : grid_(std::move(grid)), times_(std::move(times)), mu_(mu), spec_(spec)
{
    require(mu > 0 && std::isfinite(mu), ErrorCode::InvalidArgument, "mass must be positive");
    validate(spec_);
    const int n = grid_->size();
    a0_.resize(n);
    for (int i = 0; i < n; ++i) {
        const double k = grid_->modes()[i];
        a0_[i] = k * k + mu_ * mu_;
    }
}

bool OperatorFamily::is_free() const noexcept
{
    return (!spec_.potential || spec_.c_V == 0.0) && (!spec_.principal || spec_.c_b == 0.0);
}

Eigen::VectorXd OperatorFamily::coefficient_values(CoefficientKind kind, double t) const
{
    const int n = grid_->size();
    Eigen::VectorXd c(n);
    for (int l = 0; l < n; ++l) c[l] = coefficient(spec_, kind, t, grid_->point(l));
    return c;
}

Eigen::MatrixXcd OperatorFamily::mode_matrix(double t) const
{
    const int n = grid_->size();
    const Eigen::VectorXd& k = grid_->modes();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    if (spec_.principal && spec_.c_b != 0.0) {
        const Eigen::MatrixXcd mb = multiplication_matrix(*grid_, coefficient_values(CoefficientKind::b, t));
        a = k.asDiagonal() * mb * k.asDiagonal();
    }
    if (spec_.potential && spec_.c_V != 0.0)
        a += multiplication_matrix(*grid_, coefficient_values(CoefficientKind::V, t));
    a.diagonal() += a0_.cast<cd>();
    return 0.5 * (a + a.adjoint());
}

SpatialOperator OperatorFamily::at(double t) const
{
    if (is_free()) return SpatialOperator::multiplier(grid_, a0_.cast<cd>());
    return SpatialOperator::dense(grid_, mode_matrix(t));
}

OperatorFamily::Slice OperatorFamily::slice(double t) const
{
    Slice c;
    c.t = t;
    c.has_b = spec_.principal && spec_.c_b != 0.0;
    c.has_v = spec_.potential && spec_.c_V != 0.0;
    if (c.has_b) c.b = coefficient_values(CoefficientKind::b, t).cast<cd>();
    if (c.has_v) c.v = coefficient_values(CoefficientKind::V, t).cast<cd>();
    return c;
}

void OperatorFamily::apply_modes(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const
{
    apply_modes(slice(t), x, out);
}

void OperatorFamily::apply_modes(const Slice& c, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const
{
    apply_perturbation_modes(c, x, out);
    out += a0_.asDiagonal() * x;
}

void OperatorFamily::apply_perturbation_modes(const Slice& c, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const
{
    const int n = grid_->size();
    const Eigen::VectorXcd k = grid_->modes().cast<cd>();
    out.setZero(x.rows(), x.cols());
    if (!c.has_b && !c.has_v) return;
    Eigen::VectorXcd col(n), phys(n);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (c.has_b) {
            col = k.cwiseProduct(x.col(j));
            grid_->inverse(col.data(), phys.data());
            phys = phys.cwiseProduct(c.b);
            grid_->forward(phys.data(), col.data());
            out.col(j) += k.cwiseProduct(col);
        }
        if (c.has_v) {
            col = x.col(j);
            grid_->inverse(col.data(), phys.data());
            phys = phys.cwiseProduct(c.v);
            grid_->forward(phys.data(), col.data());
            out.col(j) += col;
        }
    }
}

OperatorFamily assemble_A(GridPtr grid, TimeGridPtr times, double mu, const PerturbationSpec& spec)
{
    validate(spec);
    const double L = grid->half_length();
    for (int l = 0; l < grid->size(); ++l) {
        const double x = grid->point(l);
        if (std::abs(x) < 0.9 * L) continue;
        // Coefficients are maximal at t = 0 for fixed x.
        for (CoefficientKind kind : {CoefficientKind::V, CoefficientKind::b}) {
            require(std::abs(coefficient(spec, kind, 0.0, x)) < 1e-8, ErrorCode::BoundaryTail,
                    "perturbation exceeds 1e-8 near the spatial boundary; enlarge L or enable the taper");
        }
    }
    return OperatorFamily(std::move(grid), std::move(times), mu, spec);
}

namespace {

double dense_norm(const Eigen::MatrixXcd& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace

DecayReport decay_certificate(const OperatorFamily& family, double delta, int samples)
{
    const double T = family.times().half_length();
    require(T >= 10.0 * family.spec().sigma, ErrorCode::InsufficientRange,
            "decay fit needs T >= 10 sigma");
    require(samples >= 3, ErrorCode::InvalidArgument, "need at least three decay samples");
    DecayReport r;
    r.threshold_A = -delta + 0.2;
    r.threshold_dA = -delta - 0.8;
    const double t0 = T / 4.0;
    const double h = family.times().step();
    const Eigen::MatrixXcd a0 = family.free_symbol().cast<cd>().asDiagonal();
    for (int i = 0; i < samples; ++i) {
        const double t = t0 * std::pow(T / t0, static_cast<double>(i) / (samples - 1));
        r.t.push_back(t);
        r.norm_A.push_back(dense_norm(family.mode_matrix(t) - a0));
        const Eigen::MatrixXcd d = (family.mode_matrix(t + h) - family.mode_matrix(t - h)) / (2.0 * h);
        r.norm_dA.push_back(dense_norm(d));
    }
    r.fit_A = fit_power_law(r.t, r.norm_A);
    r.fit_dA = fit_power_law(r.t, r.norm_dA);
    r.pass = r.fit_A.exponent <= r.threshold_A && r.fit_dA.exponent <= r.threshold_dA;
    return r;
}

} // namespace kglab
