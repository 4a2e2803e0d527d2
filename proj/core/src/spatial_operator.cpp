#include "kglab/spatial_operator.hpp"

#include "kglab/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>

namespace kglab {

namespace {

void check_same_grid(const SpatialOperator& a, const SpatialOperator& b)
{
    require(a.grid() == b.grid() || a.size() == b.size(), ErrorCode::InvalidArgument,
            "operators live on different grids");
}

void check_dense_size(int n)
{
    require(n <= kDenseCap, ErrorCode::SizeCap, "dense operators are capped at N <= 512");
}

} // namespace

SpatialOperator::SpatialOperator(GridPtr grid, Kind kind, Eigen::VectorXcd symbol,
                                 Eigen::MatrixXcd matrix)
    : grid_(std::move(grid)), kind_(kind), symbol_(std::move(symbol)), matrix_(std::move(matrix))
{
}

SpatialOperator SpatialOperator::multiplier(GridPtr grid, Eigen::VectorXcd symbol)
{
    require(symbol.size() == grid->size(), ErrorCode::InvalidArgument, "symbol size mismatch");
    require(symbol.allFinite(), ErrorCode::InvalidArgument, "symbol values must be finite");
    return SpatialOperator(std::move(grid), Kind::Multiplier, std::move(symbol), {});
}

SpatialOperator SpatialOperator::dense(GridPtr grid, Eigen::MatrixXcd mode_matrix)
{
    const int n = grid->size();
    check_dense_size(n);
    require(mode_matrix.rows() == n && mode_matrix.cols() == n, ErrorCode::InvalidArgument,
            "dense operator size mismatch");
    require(mode_matrix.allFinite(), ErrorCode::InvalidArgument, "matrix entries must be finite");
    return SpatialOperator(std::move(grid), Kind::Dense, {}, std::move(mode_matrix));
}

SpatialOperator SpatialOperator::from_physical(GridPtr grid, const Eigen::MatrixXcd& matrix)
{
    check_dense_size(grid->size());
    // F M F^{-1}: transform columns, then rows.
    Eigen::MatrixXcd left = grid->to_modes(matrix);
    Eigen::MatrixXcd m = grid->to_modes(Eigen::MatrixXcd(left.adjoint())).adjoint();
    return dense(std::move(grid), std::move(m));
}

SpatialOperator SpatialOperator::identity(GridPtr grid)
{
    const int n = grid->size();
    return multiplier(std::move(grid), Eigen::VectorXcd::Ones(n));
}

const Eigen::VectorXcd& SpatialOperator::symbol() const
{
    require(is_multiplier(), ErrorCode::InvalidArgument, "operator is not a multiplier");
    return symbol_;
}

Eigen::MatrixXcd SpatialOperator::mode_matrix() const
{
    if (is_multiplier()) return symbol_.asDiagonal();
    return matrix_;
}

Eigen::MatrixXcd SpatialOperator::physical_matrix() const
{
    check_dense_size(size());
    const Eigen::MatrixXcd m = mode_matrix();
    // F^{-1} M F
    Eigen::MatrixXcd left = grid_->from_modes(m);
    return grid_->from_modes(Eigen::MatrixXcd(left.adjoint())).adjoint();
}

Eigen::VectorXcd SpatialOperator::apply_modes(const Eigen::VectorXcd& c) const
{
    if (is_multiplier()) return symbol_.cwiseProduct(c);
    return matrix_ * c;
}

GridFunction SpatialOperator::apply(const GridFunction& u) const
{
    return grid_->from_modes(apply_modes(grid_->to_modes(u)));
}

SpatialOperator SpatialOperator::adjoint() const
{
    if (is_multiplier()) return multiplier(grid_, symbol_.conjugate());
    return dense(grid_, matrix_.adjoint());
}

SpatialOperator SpatialOperator::scaled(cd a) const
{
    if (is_multiplier()) return multiplier(grid_, a * symbol_);
    return dense(grid_, a * matrix_);
}

bool SpatialOperator::is_hermitian(double rtol) const
{
    if (is_multiplier()) {
        const double scale = symbol_.cwiseAbs().maxCoeff();
        return symbol_.imag().cwiseAbs().maxCoeff() <= rtol * scale;
    }
    return kglab::is_hermitian(matrix_, rtol);
}

double SpatialOperator::norm() const
{
    if (is_multiplier()) return symbol_.cwiseAbs().maxCoeff();
    return spectral_norm(matrix_);
}

SpatialOperator compose(const SpatialOperator& a, const SpatialOperator& b)
{
    check_same_grid(a, b);
    if (a.is_multiplier() && b.is_multiplier())
        return SpatialOperator::multiplier(a.grid_, a.symbol_.cwiseProduct(b.symbol_));
    if (a.is_multiplier())
        return SpatialOperator::dense(a.grid_, a.symbol_.asDiagonal() * b.matrix_);
    if (b.is_multiplier())
        return SpatialOperator::dense(a.grid_, a.matrix_ * b.symbol_.asDiagonal());
    return SpatialOperator::dense(a.grid_, a.matrix_ * b.matrix_);
}

SpatialOperator operator+(const SpatialOperator& a, const SpatialOperator& b)
{
    check_same_grid(a, b);
    if (a.is_multiplier() && b.is_multiplier())
        return SpatialOperator::multiplier(a.grid_, a.symbol_ + b.symbol_);
    return SpatialOperator::dense(a.grid_, a.mode_matrix() + b.mode_matrix());
}

SpatialOperator operator-(const SpatialOperator& a, const SpatialOperator& b)
{
    return a + b.scaled(-1.0);
}

SpatialOperator multiplier_op(GridPtr grid, const std::function<cd(double)>& symbol)
{
    Eigen::VectorXcd s(grid->size());
    for (int i = 0; i < grid->size(); ++i) s[i] = symbol(grid->modes()[i]);
    return SpatialOperator::multiplier(std::move(grid), std::move(s));
}

bool is_hermitian(const Eigen::MatrixXcd& m, double rtol)
{
    const double scale = m.norm();
    return (m - m.adjoint()).norm() <= rtol * std::max(scale, 1e-300);
}

double spectral_norm(const Eigen::MatrixXcd& m)
{
    if (m.size() == 0) return 0.0;
    if (is_hermitian(m, 1e-13)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()[0];
}

double min_hermitian_part(const Eigen::MatrixXcd& m)
{
    const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

namespace {

// Root of a matrix whose Hermitian part is positive definite: simplified
// Newton in the eigenbasis of the Hermitian part, with the Sylvester operator
// frozen at the initial guess. Bendixson's bound places the spectrum of m to
// the right of lambda_min(H). Returns nothing when the iteration stalls or
// leaves the principal branch.
std::optional<Eigen::MatrixXcd> sqrt_near_hermitian(const Eigen::MatrixXcd& m, double floor_eps)
{
    const Eigen::Index n = m.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    const Eigen::VectorXd& lam = es.eigenvalues();
    if (!(lam[0] > floor_eps)) return std::nullopt;
    const Eigen::MatrixXcd& v = es.eigenvectors();
    const Eigen::MatrixXcd mp = v.adjoint() * m * v;
    const Eigen::VectorXd r = lam.cwiseSqrt();
    Eigen::MatrixXcd x = r.cast<cd>().asDiagonal();
    const double scale = mp.norm();
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 40; ++it) {
        Eigen::MatrixXcd res = mp;
        res.noalias() -= x * x;
        const double rn = res.norm();
        if (rn <= 1e-14 * scale) break;
        if (rn >= last) return std::nullopt;
        last = rn;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) x(i, j) += res(i, j) / (r[i] + r[j]);
    }
    Eigen::MatrixXcd dev = x;
    dev.diagonal() -= r.cast<cd>();
    if (!(dev.norm() < r[0])) return std::nullopt;
    return Eigen::MatrixXcd(v * x * v.adjoint());
}

} // namespace

Eigen::MatrixXcd principal_sqrt(const Eigen::MatrixXcd& m, double floor_eps)
{
    const Eigen::Index n = m.rows();
    require(m.cols() == n, ErrorCode::InvalidArgument, "square matrix required");
    if (is_hermitian(m, 1e-13)) {
        const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        const Eigen::VectorXd& lam = es.eigenvalues();
        require(lam[0] > floor_eps, ErrorCode::SpectrumTooClose,
                "eigenvalue " + std::to_string(lam[0]) + " too close to the branch cut");
        const Eigen::MatrixXcd& v = es.eigenvectors();
        return v * lam.cwiseSqrt().asDiagonal() * v.adjoint();
    }
    if (auto near = sqrt_near_hermitian(m, floor_eps)) return *near;
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(m);
    const Eigen::MatrixXcd& t = schur.matrixT();
    const Eigen::MatrixXcd& u = schur.matrixU();
    for (Eigen::Index i = 0; i < n; ++i) {
        require(t(i, i).real() > floor_eps, ErrorCode::SpectrumTooClose,
                "eigenvalue with real part " + std::to_string(t(i, i).real()) +
                    " too close to the branch cut");
    }
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        r(j, j) = std::sqrt(t(j, j));
        for (Eigen::Index i = j - 1; i >= 0; --i) {
            cd s = 0.0;
            for (Eigen::Index k = i + 1; k < j; ++k) s += r(i, k) * r(k, j);
            r(i, j) = (t(i, j) - s) / (r(i, i) + r(j, j));
        }
    }
    return u * r * u.adjoint();
}

SpatialOperator principal_sqrt(const SpatialOperator& t, double floor_eps)
{
    if (t.is_multiplier()) {
        const Eigen::VectorXcd& s = t.symbol();
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            require(s[i].real() > floor_eps, ErrorCode::SpectrumTooClose,
                    "symbol value too close to the branch cut");
        }
        return SpatialOperator::multiplier(t.grid(), s.cwiseSqrt());
    }
    return SpatialOperator::dense(t.grid(), principal_sqrt(t.mode_matrix(), floor_eps));
}

Eigen::MatrixXcd multiplication_matrix(const SpatialGrid& grid, const Eigen::VectorXd& c)
{
    const int n = grid.size();
    check_dense_size(n);
    Eigen::VectorXcd chat = grid.to_modes(Eigen::VectorXcd(c.cast<cd>()));
    chat /= std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd m(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) m(i, j) = chat[((i - j) % n + n) % n];
    return m;
}

} // namespace kglab
