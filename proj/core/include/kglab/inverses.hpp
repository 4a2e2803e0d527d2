#pragma once

#include "kglab/evolution.hpp"
#include "kglab/free_theory.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace kglab {

enum class SolveMethod { Feynman, Retarded, Advanced, Bvp };

std::string_view to_string(SolveMethod m) noexcept;
SolveMethod parse_solve_method(std::string_view name);

/// Where the Feynman conditions live: on the free splitting at +-T, or on the
/// diagonal components themselves (p(-T) = 0, q(T) = 0).
enum class FeynmanBoundary { Free, Diagonal };

std::string_view to_string(FeynmanBoundary b) noexcept;
FeynmanBoundary parse_feynman_boundary(std::string_view name);

struct SolveOptions {
    double tol = 1e-6;  ///< target for the weighted relative residual
    int k_max = 20;
    double gamma = 1.0;
    double s = 0.0;
    StepperSpec stepper{.tol = 1e-9};
    FeynmanBoundary boundary = FeynmanBoundary::Free;
    double check_step = 0.01;  ///< RK4 step bound of the residual re-integration
};

void validate(const SolveOptions& options);

/// Relative energy of the wrong-frequency part at each end:
/// |Pm psi(T)|_E / |psi(T)|_E and |Pp psi(-T)|_E / |psi(-T)|_E.
struct BoundaryDefects {
    double at_plus = 0.0;
    double at_minus = 0.0;
};

struct ResidualReport {
    double absolute = 0.0;  ///< (sum dt <t>^{2 gamma} rho_j^2)^{1/2}
    double relative = 0.0;  ///< absolute / ||f||_{Y}
    double source_norm = 0.0;
    double max_defect = 0.0;  ///< max_j rho_j
};

struct SolveReport {
    SolveMethod method = SolveMethod::Feynman;
    CauchyTrajectory solution;
    ResidualReport residual;
    BoundaryDefects defects;
    int iterations = 0;
    std::vector<double> corrections;
    double contraction = 0.0;  ///< largest ratio of successive corrections
    bool converged = false;
    int substeps = 0;
    double sweep_error = 0.0;
    FactorMethod factor_method = FactorMethod::Adiabatic;
    int factor_K = 0;
    std::vector<std::string> escalation;  ///< factorizations tried, in order
};

/// Factorization, transform and free data for one operator family. Holds a
/// copy of the family; the closures built during a solve refer to it.
class SolverContext {
public:
    SolverContext(const OperatorFamily& family, FactorizationResult factor);

    const OperatorFamily& family() const noexcept { return family_; }
    const FactorizationResult& factor() const noexcept { return factor_; }
    const Transform& transform() const noexcept { return transform_; }
    const DiagonalGenerator& generator() const noexcept { return generator_; }
    const FreePack& free_pack() const noexcept { return free_; }
    const SpatialGrid& grid() const noexcept { return family_.grid(); }
    const TimeGrid& times() const noexcept { return family_.times(); }
    bool remainder_vanishes() const noexcept { return zero_remainder_; }

private:
    OperatorFamily family_;
    FactorizationResult factor_;
    Transform transform_;
    DiagonalGenerator generator_;
    FreePack free_;
    bool zero_remainder_ = false;
};

/// Impulse g delta(t - t_j): the component jumps by i g across node j; the
/// stored node value is the average of the two sides.
struct DiagonalImpulse {
    int node = 0;
    Eigen::VectorXcd p;  ///< mode coefficients; empty means none
    Eigen::VectorXcd q;
};

struct DiagonalSource {
    ModeSource p;
    ModeSource q;
    std::vector<DiagonalImpulse> impulses;
};

/// p solves (D_t - B) p = g_p from p(-T) = 0, q solves (D_t + B^*) q = g_q
/// back from q(T) = 0. Node values in mode coefficients.
struct DiagonalModes {
    std::vector<Eigen::VectorXcd> p;
    std::vector<Eigen::VectorXcd> q;
    int substeps = 0;
    double error_estimate = 0.0;
};

DiagonalModes feynman_apply_diag(const SolverContext& ctx, const DiagonalSource& g, const StepperSpec& spec);

/// Solution of P u = f with Feynman, retarded or advanced conditions by
/// fixed-point refinement on the remainder. f gives mode coefficients.
SolveReport feynman_solve(const SolverContext& ctx, const ModeSource& f, const SolveOptions& options = {});
SolveReport retarded_solve(const SolverContext& ctx, const ModeSource& f, const SolveOptions& options = {});
SolveReport advanced_solve(const SolverContext& ctx, const ModeSource& f, const SolveOptions& options = {});

/// feynman_solve that moves to a better factorization (adiabatic, iterate
/// with K = 2, Riccati) when refinement stalls or misses the tolerance.
SolveReport feynman_solve_escalating(const OperatorFamily& family, const ModeSource& f,
                                     const SolveOptions& options, FactorOptions factor);

/// Per-interval defect of a node trajectory (mode coefficients): each
/// interval is re-integrated from its left node by the Cauchy flow with the
/// exact A(t) and compared with the right node.
ResidualReport residual_check(const OperatorFamily& family, const std::vector<Eigen::VectorXcd>& u,
                              const std::vector<Eigen::VectorXcd>& v, const ModeSource& f, double gamma,
                              double s, int substeps);

BoundaryDefects boundary_defects(const FreePack& pack, const CauchyTrajectory& psi);

/// sqrt(h sum <k>^{2s} (omega^2 |u_k|^2 + |v_k|^2)) on mode coefficients.
double energy_norm_modes(const FreePack& pack, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v,
                         double s = 0.0);

/// (sum_j w_j <t_j>^{2 gamma} ||f(t_j)||_s^2)^{1/2} with f in modes.
double source_norm(const SpatialGrid& grid, const TimeGrid& times, const ModeSource& f, double gamma, double s);

/// Node trajectory in mode coefficients converted to point values.
CauchyTrajectory to_trajectory(const SpatialGrid& grid, const TimeGridPtr& times,
                               const std::vector<Eigen::VectorXcd>& u, const std::vector<Eigen::VectorXcd>& v);

} // namespace kglab
