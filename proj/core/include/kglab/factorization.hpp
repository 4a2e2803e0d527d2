#pragma once

#include "kglab/fit.hpp"
#include "kglab/model.hpp"

#include <array>
#include <memory>
#include <string_view>

namespace kglab {

/// Dense mode-basis matrices sampled on a TimeGrid, evaluated between nodes
/// by 4-point Lagrange interpolation. A single sample means a constant family.
class OperatorSamples {
public:
    OperatorSamples(TimeGridPtr times, std::vector<Eigen::MatrixXcd> samples);

    const TimeGrid& times() const noexcept { return *times_; }
    const TimeGridPtr& time_grid() const noexcept { return times_; }
    bool is_constant() const noexcept { return samples_.size() == 1; }
    int dim() const noexcept { return static_cast<int>(samples_.front().rows()); }
    /// Sample at node j (the constant sample for constant families).
    const Eigen::MatrixXcd& node(int j) const { return samples_[is_constant() ? 0 : j]; }
    const std::vector<Eigen::MatrixXcd>& samples() const noexcept { return samples_; }

    struct Stencil {
        int first = 0;
        int count = 1;
        std::array<double, 4> w{1.0, 0.0, 0.0, 0.0};
    };
    Stencil stencil(double t) const;

    Eigen::MatrixXcd at(double t) const;
    /// out = M(t) x, or M(t)^* x when adjoint is set.
    void apply(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out, bool adjoint = false) const;

private:
    TimeGridPtr times_;
    std::vector<Eigen::MatrixXcd> samples_;
    bool diagonal_ = false;
};

using SamplesPtr = std::shared_ptr<const OperatorSamples>;

enum class FactorMethod { Adiabatic, Iterate, Riccati };

std::string_view to_string(FactorMethod m) noexcept;
FactorMethod parse_factor_method(std::string_view name);

struct FactorOptions {
    FactorMethod method = FactorMethod::Adiabatic;
    int K = 2;
    double floor = 0.0;  ///< <= 0 means mu/2
    double sqrt_floor_eps = 1e-8;
    double blowup_factor = 10.0;
    int riccati_substeps = 2;       ///< initial substeps per node interval
    double riccati_tol = 1e-9;      ///< substeps double until max ||R|| / ||A|| meets this
    int riccati_max_substeps = 32;
    bool riccati_fallback = true;  ///< blow-up falls back to iterate(K)
};

struct FactorizationResult {
    FactorMethod method = FactorMethod::Adiabatic;
    int K = 0;
    double floor = 0.0;
    bool floor_applied = false;
    bool riccati_fell_back = false;
    int riccati_substeps = 0;  ///< substeps the Riccati integration settled on
    SamplesPtr B;
    SamplesPtr R;
    std::vector<double> remainder_norm;  ///< ||R(t_j)|| per node (power estimate)
    std::vector<double> a_norm;          ///< ||A(t_j)|| per node (power estimate)
    double max_relative_remainder = 0.0;
    std::vector<double> fit_t;
    std::vector<double> fit_norm;
    PowerFit remainder_fit;
    double smoothing_proxy = 0.0;  ///< max over fit samples of ||<k>^2 R <k>^{-1}||
    double min_hermitian = 0.0;    ///< min_t lambda_min((B+B^*)/2)
    double fd_order = 0.0;         ///< Richardson-observed order of the d/dt stencil
};

FactorizationResult construct_B(const OperatorFamily& family, const FactorOptions& options = {});

/// Raises eigenvalues of the Hermitian part below floor to floor.
Eigen::MatrixXcd enforce_floor(const Eigen::MatrixXcd& b, double floor, bool* applied = nullptr,
                               double* min_eig = nullptr);
OperatorSamples enforce_floor(const OperatorSamples& b, double floor, bool* applied = nullptr);

/// Fourth-order centered differences along the nodes (one-sided at the ends).
Eigen::MatrixXcd node_derivative(const OperatorSamples& b, int j, int stride = 1);

/// Largest singular value by power iteration on M^* M.
double norm_estimate(const Eigen::MatrixXcd& m, int iterations = 40);

/// T = [[B, 1], [-B^*, 1]] and its inverse at each node.
class Transform {
public:
    Transform(SamplesPtr b, double floor);

    const OperatorSamples& B() const noexcept { return *b_; }
    const OperatorSamples& S_inverse() const noexcept { return *s_inv_; }

    void forward_modes(int j, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v,
                       Eigen::VectorXcd& p, Eigen::VectorXcd& q) const;
    void inverse_modes(int j, const Eigen::VectorXcd& p, const Eigen::VectorXcd& q,
                       Eigen::VectorXcd& u, Eigen::VectorXcd& v) const;
    DiagonalDatum forward(int j, const CauchyDatum& psi, const SpatialGrid& grid) const;
    CauchyDatum inverse(int j, const DiagonalDatum& phi, const SpatialGrid& grid) const;

private:
    SamplesPtr b_;
    SamplesPtr s_inv_;
};

/// FloorMissing if lambda_min((B+B^*)/2) < floor/2 at some node.
Transform build_transform(const FactorizationResult& f);

/// diag(B, -B^*) acting on the two diagonal components.
class DiagonalGenerator {
public:
    explicit DiagonalGenerator(SamplesPtr b) : b_(std::move(b)) {}
    const OperatorSamples& B() const noexcept { return *b_; }
    void apply_p(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const { b_->apply(t, x, out); }
    void apply_q(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const
    {
        b_->apply(t, x, out, true);
        out = -out;
    }

private:
    SamplesPtr b_;
};

DiagonalGenerator diagonal_generator(const FactorizationResult& f);

} // namespace kglab
