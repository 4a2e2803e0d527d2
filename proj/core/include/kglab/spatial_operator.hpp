#pragma once

#include "kglab/field.hpp"
#include "kglab/grid.hpp"

#include <functional>

namespace kglab {

/// Largest admissible dense operator size.
inline constexpr int kDenseCap = 512;

/// Linear map on grid functions: diagonal in modes (Multiplier) or a full
/// matrix acting on mode coefficients (Dense).
class SpatialOperator {
public:
    enum class Kind { Multiplier, Dense };

    static SpatialOperator multiplier(GridPtr grid, Eigen::VectorXcd symbol);
    static SpatialOperator dense(GridPtr grid, Eigen::MatrixXcd mode_matrix);
    static SpatialOperator from_physical(GridPtr grid, const Eigen::MatrixXcd& matrix);
    static SpatialOperator identity(GridPtr grid);

    Kind kind() const noexcept { return kind_; }
    bool is_multiplier() const noexcept { return kind_ == Kind::Multiplier; }
    const GridPtr& grid() const noexcept { return grid_; }
    int size() const noexcept { return grid_->size(); }

    /// Symbol values in FFT order (Multiplier only).
    const Eigen::VectorXcd& symbol() const;
    /// Matrix in the unitary mode basis (either kind).
    Eigen::MatrixXcd mode_matrix() const;
    /// Matrix acting on point values.
    Eigen::MatrixXcd physical_matrix() const;

    GridFunction apply(const GridFunction& u) const;
    Eigen::VectorXcd apply_modes(const Eigen::VectorXcd& c) const;

    SpatialOperator adjoint() const;
    SpatialOperator scaled(cd a) const;
    bool is_hermitian(double rtol = 1e-12) const;
    /// Operator 2-norm.
    double norm() const;

    friend SpatialOperator compose(const SpatialOperator& a, const SpatialOperator& b);
    friend SpatialOperator operator+(const SpatialOperator& a, const SpatialOperator& b);
    friend SpatialOperator operator-(const SpatialOperator& a, const SpatialOperator& b);

private:
    SpatialOperator(GridPtr grid, Kind kind, Eigen::VectorXcd symbol, Eigen::MatrixXcd matrix);

    GridPtr grid_;
    Kind kind_;
    Eigen::VectorXcd symbol_;
    Eigen::MatrixXcd matrix_;
};

/// Fourier multiplier from a symbol evaluated on every grid wavenumber.
SpatialOperator multiplier_op(GridPtr grid, const std::function<cd(double)>& symbol);

/// Principal square root; throws SpectrumTooClose when an eigenvalue has
/// real part <= floor_eps.
SpatialOperator principal_sqrt(const SpatialOperator& t, double floor_eps = 1e-8);

/// Matrix-level principal root: eigendecomposition for Hermitian input,
/// complex Schur form plus the triangular recurrence otherwise.
Eigen::MatrixXcd principal_sqrt(const Eigen::MatrixXcd& m, double floor_eps = 1e-8);

bool is_hermitian(const Eigen::MatrixXcd& m, double rtol = 1e-12);
double spectral_norm(const Eigen::MatrixXcd& m);
/// Smallest eigenvalue of (m + m^*)/2.
double min_hermitian_part(const Eigen::MatrixXcd& m);

/// Multiplication by a real grid function, written in the mode basis
/// (a circulant in mode indices).
Eigen::MatrixXcd multiplication_matrix(const SpatialGrid& grid, const Eigen::VectorXd& c);

} // namespace kglab
