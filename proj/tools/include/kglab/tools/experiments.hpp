#pragma once

#include "kglab/analysis.hpp"
#include "kglab/bvp.hpp"
#include "kglab/inverses.hpp"
#include "kglab/source.hpp"
#include "kglab/tools/report.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

namespace kglab::tools {

/// One configured experiment: grids, the operator family and the expensive
/// shared pieces (factorization, BVP solvers, reference solves), built on
/// first use. The config is assumed validated.
class Lab {
public:
    explicit Lab(ExperimentConfig cfg);

    const ExperimentConfig& config() const noexcept { return cfg_; }
    const GridPtr& grid() const noexcept { return grid_; }
    const TimeGridPtr& times() const noexcept { return times_; }
    const OperatorFamily& family() const noexcept { return *family_; }
    SolveOptions solve_options() const { return cfg_.solve_options(); }
    /// The configured Gaussian source.
    Source source() const;

    const SolverContext& context();
    const BvpSolver& bvp();
    const BvpSolver& anti_bvp();

    struct RandomSolve {
        std::uint64_t seed = 0;
        Source source;
        SolveReport feynman;
        SolveReport bvp;
        double agreement = 0.0;  ///< relative difference of u on |t| <= T/2
    };
    /// Five random admissible sources (seeds 1..5), each solved by
    /// feynman_solve and the BVP.
    const std::vector<RandomSolve>& random_solves();

    /// Homogeneous solution with pure component-1 data at t = -T.
    const CauchySweep& homogeneous();
    double homogeneous_tol() const { return 0.1 * cfg_.solver.stepper_tol; }

    struct PointSolves {
        Source source;
        SolveReport feynman;
        SolveReport retarded;
    };
    /// Feynman and retarded solutions for a narrow source at the origin.
    const PointSolves& point_solves();

private:
    ExperimentConfig cfg_;
    GridPtr grid_;
    TimeGridPtr times_;
    std::unique_ptr<OperatorFamily> family_;
    std::unique_ptr<SolverContext> context_;
    std::unique_ptr<BvpSolver> bvp_;
    std::unique_ptr<BvpSolver> anti_bvp_;
    std::optional<std::vector<RandomSolve>> random_;
    std::optional<CauchySweep> homogeneous_;
    std::optional<PointSolves> point_;
};

ModeSource mode_source(const Source& s);

/// max_{|t_j| <= T/2} ||a.u_j - b.u_j|| / max_{|t_j| <= T/2} ||b.u_j||.
double inner_window_difference(const CauchyTrajectory& a, const CauchyTrajectory& b);

/// Charge drift on the leading and trailing node ranges where the source
/// vanishes identically; the larger of the two.
ChargeReport quiet_charge_drift(const SpatialGrid& grid, const CauchyTrajectory& psi, const Source& f, double tol);

Json to_json(const SolveReport& r, const Lab& lab);
Table solution_table(const SpatialGrid& grid, const CauchyTrajectory& psi, const std::string& file);

Outcome free_check(Lab& lab);
Outcome factorize(Lab& lab);
Outcome solve(Lab& lab, SolveMethod method);
Outcome asymptotics(Lab& lab);
Outcome microlocal(Lab& lab);
Outcome laplim(Lab& lab);

enum class Axis { Dt, H, T };
std::string_view to_string(Axis a) noexcept;
Axis parse_axis(std::string_view name);

Outcome converge(Lab& lab, Axis axis);

/// The eps list of the window identity, restricted to 2/eps <= T.
std::vector<double> window_eps(double T);

} // namespace kglab::tools
