#pragma once

#include "kglab/factorization.hpp"
#include "kglab/fit.hpp"
#include "kglab/free_theory.hpp"

#include <string>
#include <vector>

namespace kglab {

struct ChargeReport {
    std::vector<double> values;  ///< J(t_j)
    double reference = 0.0;      ///< J at the first node of the checked range
    double drift = 0.0;          ///< max |J - reference| over the range
    double bound = 0.0;          ///< 100 tol (1 + |reference|)
    bool pass = false;
};

/// J(t) = Im <d_t u, u> = h Re sum v conj(u), per node.
std::vector<double> kg_charge(const SpatialGrid& grid, const CauchyTrajectory& psi);

/// Drift of J over nodes [first, last] against 100 tol (1 + |J(first)|).
ChargeReport charge_drift(const SpatialGrid& grid, const CauchyTrajectory& psi, double tol, int first = 0,
                          int last = -1);

struct AsymptoticFit {
    std::string component;  ///< "q+" or "q-"
    int side = 1;           ///< +1: t -> +inf, -1: t -> -inf
    double t_min = 0.0;
    double t_max = 0.0;
    double constant = 0.0;  ///< c
    double amplitude = 0.0;
    double exponent = 0.0;  ///< rho in q = c + a |t|^rho
    double residual = 0.0;
};

struct MassReport {
    std::vector<double> t;
    std::vector<double> q_plus;
    std::vector<double> q_minus;
    std::vector<double> energy;  ///< |psi(t)|_E^2
    std::vector<AsymptoticFit> fits;
};

/// q+-(t) = |p(t)|^2, |q(t)|^2 with (p, q) = T(t)(u, D_t u), and offset-power
/// fits on |t| in [T/4, T] at both ends. WindowTooShort below 8 nodes.
MassReport diag_masses(const Transform& transform, const FreePack& pack, const CauchyTrajectory& psi);

/// Smooth even cutoff: 1 on [-1, 1], 0 outside [-2, 2].
double bump(double s);
double bump_derivative(double s);

struct WindowRow {
    double eps = 0.0;
    double S = 0.0;      ///< with the asymptotic constants of each end removed
    double S_raw = 0.0;  ///< without; tends to |jump of q+ - q-| between the ends
};

struct WindowReport {
    std::vector<WindowRow> rows;
    PowerFit fit;  ///< S ~ C eps^exponent
};

/// S(eps) = |sum_j w_j d_t chi_eps(t_j) (q+(t_j) - q-(t_j) - (c+ - c-))| with
/// chi_eps(t) = bump(eps t) and c+- the fitted constants of the end that t_j
/// lies towards. InvalidArgument when 2 / eps > T.
WindowReport window_identity_check(const TimeGrid& times, const MassReport& masses, const std::vector<double>& eps);

struct FrequencySplit {
    double plus = 0.0;
    double minus = 0.0;
};

/// Energy fractions of Pp psi and Pm psi. ZeroDatum for psi = 0.
FrequencySplit frequency_split(const FreePack& pack, const CauchyDatum& psi);
FrequencySplit frequency_split_modes(const FreePack& pack, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v);

/// Energy fraction at tau > 0 of the Hann-windowed DFT of samples
/// z(t_0 + k dt); the Nyquist and zero bins split evenly. WindowTooShort
/// when the window spans fewer than 10 periods of 2 pi / omega.
double time_frequency_sign(const std::vector<cd>& samples, double dt, double omega);

struct ConvergenceRow {
    double level = 0.0;
    double error = 0.0;
    double order = 0.0;  ///< against the previous row (0 for the first)
};

struct ConvergenceTable {
    std::string axis;
    std::vector<ConvergenceRow> rows;
    double fitted_order = 0.0;  ///< slope of log error against log level
    bool monotone = true;       ///< errors decrease along the rows
};

/// Observed orders along refinement levels (e.g. dt or h; decreasing), with a
/// least-squares fit of log error against log level. Non-monotone errors are
/// flagged, not fatal.
ConvergenceTable convergence_table(std::string axis, const std::vector<double>& levels,
                                   const std::vector<double>& errors);

} // namespace kglab
