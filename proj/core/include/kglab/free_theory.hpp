#pragma once

#include "kglab/field.hpp"
#include "kglab/spatial_operator.hpp"

#include <functional>

namespace kglab {

/// Mode-wise 2x2 block [[a, b], [c, d]] acting on the mode coefficients of
/// a Cauchy datum (u, v).
struct BlockMultiplier {
    Eigen::VectorXcd a, b, c, d;

    static BlockMultiplier identity(int n);
    static BlockMultiplier zero(int n);

    void apply_modes(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v,
                     Eigen::VectorXcd& out_u, Eigen::VectorXcd& out_v) const;
    CauchyDatum apply(const SpatialGrid& grid, const CauchyDatum& psi) const;
    BlockMultiplier scaled(cd s) const;
    /// Largest 2-norm of the per-mode 2x2 blocks.
    double norm() const;

    friend BlockMultiplier compose(const BlockMultiplier& x, const BlockMultiplier& y);
    friend BlockMultiplier operator+(const BlockMultiplier& x, const BlockMultiplier& y);
    friend BlockMultiplier operator-(const BlockMultiplier& x, const BlockMultiplier& y);
};

struct FreePack {
    GridPtr grid;
    double mu = 1.0;
    Eigen::VectorXd omega;  ///< sqrt(k^2 + mu^2), FFT order
    SpatialOperator A0;
    SpatialOperator B0;
    BlockMultiplier H0;
    BlockMultiplier Pp;  ///< projection onto the +omega eigenspace of H0
    BlockMultiplier Pm;  ///< projection onto the -omega eigenspace of H0
};

FreePack build_free(GridPtr grid, double mu);

/// exp(i t H0), mode-wise.
BlockMultiplier free_evolution(const FreePack& pack, double t);

cd free_feynman_mode_kernel(double omega, double t);
cd free_retarded_mode_kernel(double omega, double t);
cd free_advanced_mode_kernel(double omega, double t);

/// i (1_{t>0} Pp - 1_{t<0} Pm) exp(i t H0); at t = 0 the two one-sided
/// limits are averaged.
BlockMultiplier free_diag_feynman_kernel(const FreePack& pack, double t);

/// Two-component source t -> (g_u, g_v) in point values.
using CauchySource = std::function<CauchyDatum(double)>;

/// Applies the free Feynman kernel to a time-continuous source by 8-point
/// Gauss-Legendre quadrature on each node interval (source evaluated only
/// inside [-T, T]).
CauchyTrajectory free_diag_feynman_apply(const FreePack& pack, const TimeGridPtr& times,
                                         const CauchySource& source);

/// Same map for node-sampled sources, by the trapezoidal rule on either side
/// of the kernel jump (second order).
CauchyTrajectory free_diag_feynman_apply(const FreePack& pack, const CauchyTrajectory& source);

/// 8-point Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::vector<double>& x, std::vector<double>& w);

} // namespace kglab
