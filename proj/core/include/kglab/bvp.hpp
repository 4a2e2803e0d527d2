#pragma once

#include "kglab/inverses.hpp"

#include <Eigen/SparseCore>

namespace kglab {

struct BvpOptions {
    StepperSpec stepper{.tol = 1e-9};
    /// Anti-Feynman rows: positive frequencies at -T, negative ones at +T.
    bool flipped = false;
    double gamma = 1.0;
    double s = 0.0;
    double check_step = 0.01;
    double singular_tol = 1e-10;  ///< SingularSystem below this sigma_min / sigma_max
};

/// Two-point problem for the Cauchy flow with the free-splitting rows
/// Pp psi(-T) = 0, Pm psi(+T) = 0. The boundary-row block is formed once by
/// propagating a basis of ran Pm(-T) across [-T, T] and LU-factored; each
/// solve then costs two sweeps.
class BvpSolver {
public:
    BvpSolver(const OperatorFamily& family, const BvpOptions& options = {});

    SolveReport solve(const ModeSource& f) const;

    const OperatorFamily& family() const noexcept { return family_; }
    const FreePack& free_pack() const noexcept { return free_; }
    int substeps() const noexcept { return m_; }
    /// Extreme singular values of the boundary-row block.
    double sigma_min() const noexcept { return sigma_min_; }
    double sigma_max() const noexcept { return sigma_max_; }

private:
    /// Node states (energy coordinates) of the sweep from x0 with m substeps.
    std::vector<Eigen::MatrixXcd> sweep(const Eigen::MatrixXcd& x0, const ModeSource& f, int m) const;

    OperatorFamily family_;
    FreePack free_;
    BvpOptions options_;
    int m_ = 1;
    double sigma_min_ = 0.0;
    double sigma_max_ = 0.0;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

/// Scaled space-time matrix on energy coordinates x_j (2N per node):
/// rows l_start x_0 / sqrt(dt), (x_{j+1} - E_j x_j) / dt, l_end x_{J-1} / sqrt(dt),
/// with E_j the interval propagators.
Eigen::SparseMatrix<cd> bvp_system_matrix(const OperatorFamily& family, bool flipped = false,
                                          const StepperSpec& stepper = {.tol = 1e-10});

inline constexpr long kBvpDenseCap = 1L << 16;  ///< unknowns 2 N J

struct InjectivityLevel {
    int N = 0;
    int J = 0;
    double dt = 0.0;
    double sigma_min = 0.0;
    int iterations = 0;
};

struct InjectivityReport {
    std::vector<InjectivityLevel> levels;
    double finest_ratio = 0.0;    ///< sigma_min(finest) / sigma_min(next finest)
    double spread_ratio = 0.0;    ///< sigma_min(finest) / sigma_min(coarsest)
    bool pass = false;
};

struct InjectivityGrid {
    int N = 16;
    double L = 8.0;
    double T = 8.0;
    int J = 51;
};

/// Smallest singular value of bvp_system_matrix at each level by inverse
/// iteration on M^* M with sparse LU. SizeCap above kBvpDenseCap unknowns.
InjectivityReport bvp_injectivity(double mu, const PerturbationSpec& spec, const std::vector<InjectivityGrid>& grids,
                                  bool free_family = false, bool flipped = false);

double sigma_min_sparse(const Eigen::SparseMatrix<cd>& m, int* iterations = nullptr, double tol = 1e-7,
                        int max_iterations = 500);

} // namespace kglab
