#pragma once

#include "kglab/fit.hpp"
#include "kglab/spatial_operator.hpp"

namespace kglab {

struct PerturbationSpec {
    double delta = 1.5;
    double c_V = 0.1;
    double c_b = 0.1;
    double sigma = 3.0;
    bool potential = true;   ///< include V
    bool principal = true;   ///< include b
    /// Radius r of the spatial cutoff exp(-(x/r)^8); <= 0 disables it.
    double taper_radius = 0.0;
};

enum class CoefficientKind { V, b };

/// Throws InvalidArgument / EllipticityLost for inadmissible specs.
void validate(const PerturbationSpec& spec);

double coefficient(const PerturbationSpec& spec, CoefficientKind kind, double t, double x);

/// A(t) = D^* (1 + b(t, .)) D + mu^2 + V(t, .) with D the spectral derivative.
class OperatorFamily {
public:
    OperatorFamily(GridPtr grid, TimeGridPtr times, double mu, PerturbationSpec spec);

    const SpatialGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    const TimeGrid& times() const noexcept { return *times_; }
    const TimeGridPtr& time_grid() const noexcept { return times_; }
    double mu() const noexcept { return mu_; }
    const PerturbationSpec& spec() const noexcept { return spec_; }
    bool is_free() const noexcept;

    Eigen::VectorXd coefficient_values(CoefficientKind kind, double t) const;
    /// Dense A(t) in the mode basis.
    Eigen::MatrixXcd mode_matrix(double t) const;
    SpatialOperator at(double t) const;
    SpatialOperator sample(int j) const { return at(times_->node(j)); }
    /// Symbol k^2 + mu^2 of A0.
    const Eigen::VectorXd& free_symbol() const noexcept { return a0_; }

    /// Coefficient values b(t, x_l), V(t, x_l) at one time.
    struct Slice {
        double t = 0.0;
        bool has_b = false;
        bool has_v = false;
        Eigen::VectorXcd b;
        Eigen::VectorXcd v;
    };
    Slice slice(double t) const;

    /// out = A(t) X for mode-coefficient columns X, via FFTs.
    void apply_modes(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const;
    void apply_modes(const Slice& c, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const;
    /// out = (A(t) - A0) X.
    void apply_perturbation_modes(const Slice& c, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const;

private:
    GridPtr grid_;
    TimeGridPtr times_;
    double mu_;
    PerturbationSpec spec_;
    Eigen::VectorXd a0_;
};

/// Validates the spec on this grid (ellipticity, boundary tail) and builds
/// the family.
OperatorFamily assemble_A(GridPtr grid, TimeGridPtr times, double mu, const PerturbationSpec& spec);

struct DecayReport {
    std::vector<double> t;
    std::vector<double> norm_A;   ///< ||A(t) - A0||
    std::vector<double> norm_dA;  ///< ||d/dt A(t)||
    PowerFit fit_A;
    PowerFit fit_dA;
    double threshold_A = 0.0;
    double threshold_dA = 0.0;
    bool pass = false;
};

/// Fits decay exponents over t in [T/4, T]; InsufficientRange if T < 10 sigma.
DecayReport decay_certificate(const OperatorFamily& family, double delta, int samples = 8);

} // namespace kglab
