#pragma once

#include "kglab/factorization.hpp"
#include "kglab/integrator.hpp"
#include "kglab/model.hpp"

#include <functional>

namespace kglab {

struct StepperSpec {
    int order = 4;
    double tol = 1e-9;      ///< relative global error target
    double max_step = 0.05;  ///< initial step bound
    int max_steps = 1 << 20;
};

/// Only the fourth-order method is provided.
void validate(const StepperSpec& spec);

struct EvolutionInfo {
    int steps = 0;
    double error_estimate = 0.0;
};

/// Mode coefficients of a scalar time-dependent grid function.
using ModeSource = std::function<Eigen::VectorXcd(double)>;

/// d/dt [u; v] = i [v; A(t) u] + i [0; -f(t)] on stacked mode coefficients
/// (2N rows, any number of columns). f may be empty.
Rhs cauchy_rhs(const OperatorFamily& family, ModeSource f = {});

/// Energy coordinates x = ((omega u + v), (omega u - v)) / sqrt 2 per mode,
/// stacked; H0 acts there as diag(omega, -omega).
void to_energy(const Eigen::VectorXd& omega, const Eigen::MatrixXcd& uv, Eigen::MatrixXcd& x);
void from_energy(const Eigen::VectorXd& omega, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& uv);

/// The Cauchy flow in energy coordinates split for LawsonRk4: linear part
/// diag(i omega, -i omega), the rest carries A(t) - A0 and the source.
Rhs cauchy_energy_perturbation_rhs(const OperatorFamily& family, const Eigen::VectorXd& omega, ModeSource f = {});
Eigen::VectorXcd cauchy_energy_linear_part(const Eigen::VectorXd& omega);

/// Component rhs of the diagonal system: w' = i B w + i g (p) or
/// w' = -i B^* w + i g (q).
enum class Component { P, Q };
Rhs diagonal_rhs(const DiagonalGenerator& gen, Component c, ModeSource g = {});

/// The same rhs split as diag(l) w + n(t, w) around B0 = diag(omega), for
/// LawsonRk4: l = +-i omega, n = +-i (B - B0) w + i g (B^* for q).
Rhs diagonal_perturbation_rhs(const DiagonalGenerator& gen, Component c, const Eigen::VectorXd& omega,
                               ModeSource g = {});
Eigen::VectorXcd diagonal_linear_part(Component c, const Eigen::VectorXd& omega);

/// Integrates from s to t, doubling the step count until the Richardson
/// estimate |y_n - y_2n| / 15 is below tol * |y|.
Eigen::MatrixXcd integrate_controlled(const Rhs& f, const Eigen::MatrixXcd& y0, double s, double t,
                                      const StepperSpec& spec, EvolutionInfo* info = nullptr);

CauchyDatum evolve_cauchy(const OperatorFamily& family, const CauchyDatum& psi, double s, double t,
                          const StepperSpec& spec = {}, EvolutionInfo* info = nullptr);

DiagonalDatum evolve_diag(const DiagonalGenerator& gen, const SpatialGrid& grid, const DiagonalDatum& phi,
                          double s, double t, const StepperSpec& spec = {}, EvolutionInfo* info = nullptr);

/// Maps a block of initial columns at s to their values at t.
using BlockEvolver = std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&, double, double)>;

inline constexpr int kPropagatorCap = 256;

/// Columns are the evolver applied to the canonical basis of dimension dim
/// (mode coordinates); SizeCap beyond N = 256.
Eigen::MatrixXcd propagator_matrix(const BlockEvolver& evolver, int dim, double s, double t);

BlockEvolver cauchy_evolver(const OperatorFamily& family, const StepperSpec& spec = {});
/// Block-diagonal [[U_p, 0], [0, U_q]] on stacked (p, q) mode coefficients.
BlockEvolver diagonal_evolver(const DiagonalGenerator& gen, const StepperSpec& spec = {});

/// Node states of a sweep from node j0 to node j1 (either direction) with m
/// substeps per interval; states[i] is the value at node j0 +/- i.
std::vector<Eigen::MatrixXcd> sweep_nodes(const Rhs& f, Eigen::MatrixXcd y0, const TimeGrid& grid,
                                          int j0, int j1, int m);

struct SweepResult {
    std::vector<Eigen::MatrixXcd> states;
    int substeps = 0;
    double error_estimate = 0.0;
};

/// sweep_nodes with the substep count doubled from m0 until the Richardson
/// estimate over all nodes meets tol (relative to the largest state).
SweepResult sweep_controlled(const Rhs& f, const Eigen::MatrixXcd& y0, const TimeGrid& grid, int j0, int j1,
                             const StepperSpec& spec, int m0);

struct CauchySweep {
    CauchyTrajectory trajectory;
    int substeps = 0;
    double error_estimate = 0.0;
};

/// Node trajectory of the Cauchy flow through psi at node j0 (both
/// directions), Lawson steps in energy coordinates with the substep count
/// doubled until the Richardson estimate over all nodes meets spec.tol.
CauchySweep cauchy_sweep(const OperatorFamily& family, const CauchyDatum& psi, int j0, const StepperSpec& spec = {},
                         const ModeSource& f = {});

/// Substeps per node interval implied by spec.max_step.
int initial_substeps(const TimeGrid& grid, const StepperSpec& spec);

} // namespace kglab
