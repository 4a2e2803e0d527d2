#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <vector>

namespace kglab {

using cd = std::complex<double>;

/// Periodic grid on [-L, L) with N points and its discrete Fourier modes.
///
/// Mode coefficients are the unitary DFT of point values; index i of a mode
/// vector corresponds to wavenumber k = pi*j/L with j = i for i < N/2 and
/// j = i - N otherwise (FFT order).
class SpatialGrid {
public:
    SpatialGrid(int n, double half_length);
    ~SpatialGrid();
    SpatialGrid(const SpatialGrid&) = delete;
    SpatialGrid& operator=(const SpatialGrid&) = delete;

    int size() const noexcept { return n_; }
    double half_length() const noexcept { return L_; }
    double spacing() const noexcept { return h_; }
    double point(int l) const { return x_[l]; }
    const Eigen::VectorXd& points() const noexcept { return x_; }
    /// Wavenumbers in FFT order.
    const Eigen::VectorXd& modes() const noexcept { return k_; }
    int signed_index(int i) const noexcept { return i < n_ / 2 ? i : i - n_; }
    int fft_index(int j) const noexcept { return j >= 0 ? j : j + n_; }

    void forward(const cd* in, cd* out) const;
    void inverse(const cd* in, cd* out) const;

    Eigen::VectorXcd to_modes(const Eigen::VectorXcd& values) const;
    Eigen::VectorXcd from_modes(const Eigen::VectorXcd& coeffs) const;
    Eigen::MatrixXcd to_modes(const Eigen::MatrixXcd& columns) const;
    Eigen::MatrixXcd from_modes(const Eigen::MatrixXcd& columns) const;

    /// Point values of exp(i k_j x) for signed mode index j.
    Eigen::VectorXcd plane_wave(int j) const;

private:
    struct Plans;
    int n_;
    double L_;
    double h_;
    Eigen::VectorXd x_;
    Eigen::VectorXd k_;
    std::unique_ptr<Plans> plans_;
};

using GridPtr = std::shared_ptr<const SpatialGrid>;

GridPtr make_grid(int n, double half_length);

/// Uniform symmetric nodes on [-T, T] with trapezoidal weights; J odd.
class TimeGrid {
public:
    TimeGrid(double half_length, int nodes);

    double half_length() const noexcept { return T_; }
    int size() const noexcept { return static_cast<int>(t_.size()); }
    double step() const noexcept { return dt_; }
    double node(int j) const { return t_[j]; }
    const std::vector<double>& nodes() const noexcept { return t_; }
    const std::vector<double>& weights() const noexcept { return w_; }
    int center() const noexcept { return size() / 2; }
    /// Node index closest to t.
    int nearest(double t) const;
    /// Interval index j with t in [t_j, t_{j+1}], clamped to the grid.
    int interval(double t) const;

private:
    double T_;
    double dt_;
    std::vector<double> t_;
    std::vector<double> w_;
};

using TimeGridPtr = std::shared_ptr<const TimeGrid>;

TimeGridPtr make_time_grid(double half_length, int nodes);

} // namespace kglab
