#include "kglab/grid.hpp"

#include "kglab/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kglab {

struct SpatialGrid::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    ~Plans()
    {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

SpatialGrid::SpatialGrid(int n, double half_length)
    : n_(n), L_(half_length)
{
    require(n % 2 == 0, ErrorCode::InvalidArgument, "N must be even");
    require(n >= 8, ErrorCode::InvalidArgument, "N must be at least 8");
    require(half_length > 0 && std::isfinite(half_length), ErrorCode::InvalidArgument,
            "L must be positive");
    h_ = 2.0 * L_ / n_;
    x_.resize(n_);
    k_.resize(n_);
    for (int l = 0; l < n_; ++l) {
        x_[l] = -L_ + l * h_;
        k_[l] = std::numbers::pi * signed_index(l) / L_;
    }
    plans_ = std::make_unique<Plans>();
    std::vector<cd> a(n_), b(n_);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    plans_->fwd = fftw_plan_dft_1d(n_, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_->bwd = fftw_plan_dft_1d(n_, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

SpatialGrid::~SpatialGrid() = default;

void SpatialGrid::forward(const cd* in, cd* out) const
{
    if (in == out) {
        std::vector<cd> tmp(in, in + n_);
        forward(tmp.data(), out);
        return;
    }
    fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(const_cast<cd*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / std::sqrt(static_cast<double>(n_));
    for (int i = 0; i < n_; ++i) out[i] *= s;
}

void SpatialGrid::inverse(const cd* in, cd* out) const
{
    if (in == out) {
        std::vector<cd> tmp(in, in + n_);
        inverse(tmp.data(), out);
        return;
    }
    fftw_execute_dft(plans_->bwd, reinterpret_cast<fftw_complex*>(const_cast<cd*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / std::sqrt(static_cast<double>(n_));
    for (int i = 0; i < n_; ++i) out[i] *= s;
}

Eigen::VectorXcd SpatialGrid::to_modes(const Eigen::VectorXcd& values) const
{
    require(values.size() == n_, ErrorCode::InvalidArgument, "grid function size mismatch");
    Eigen::VectorXcd out(n_);
    forward(values.data(), out.data());
    return out;
}

Eigen::VectorXcd SpatialGrid::from_modes(const Eigen::VectorXcd& coeffs) const
{
    require(coeffs.size() == n_, ErrorCode::InvalidArgument, "mode vector size mismatch");
    Eigen::VectorXcd out(n_);
    inverse(coeffs.data(), out.data());
    return out;
}

Eigen::MatrixXcd SpatialGrid::to_modes(const Eigen::MatrixXcd& columns) const
{
    require(columns.rows() == n_, ErrorCode::InvalidArgument, "block size mismatch");
    Eigen::MatrixXcd out(n_, columns.cols());
    for (Eigen::Index c = 0; c < columns.cols(); ++c)
        forward(columns.col(c).data(), out.col(c).data());
    return out;
}

Eigen::MatrixXcd SpatialGrid::from_modes(const Eigen::MatrixXcd& columns) const
{
    require(columns.rows() == n_, ErrorCode::InvalidArgument, "block size mismatch");
    Eigen::MatrixXcd out(n_, columns.cols());
    for (Eigen::Index c = 0; c < columns.cols(); ++c)
        inverse(columns.col(c).data(), out.col(c).data());
    return out;
}

Eigen::VectorXcd SpatialGrid::plane_wave(int j) const
{
    const double k = std::numbers::pi * j / L_;
    Eigen::VectorXcd out(n_);
    for (int l = 0; l < n_; ++l) out[l] = std::polar(1.0, k * x_[l]);
    return out;
}

GridPtr make_grid(int n, double half_length)
{
    return std::make_shared<const SpatialGrid>(n, half_length);
}

TimeGrid::TimeGrid(double half_length, int nodes)
    : T_(half_length)
{
    require(half_length > 0 && std::isfinite(half_length), ErrorCode::InvalidArgument,
            "T must be positive");
    require(nodes >= 3 && nodes % 2 == 1, ErrorCode::InvalidArgument,
            "J must be odd and at least 3");
    const int c = nodes / 2;
    dt_ = T_ / c;
    t_.resize(nodes);
    w_.assign(nodes, dt_);
    for (int j = 0; j < nodes; ++j) t_[j] = dt_ * (j - c);
    t_.front() = -T_;
    t_.back() = T_;
    w_.front() = w_.back() = 0.5 * dt_;
}

int TimeGrid::nearest(double t) const
{
    const int j = static_cast<int>(std::lround((t + T_) / dt_));
    return std::clamp(j, 0, size() - 1);
}

int TimeGrid::interval(double t) const
{
    const int j = static_cast<int>(std::floor((t + T_) / dt_));
    return std::clamp(j, 0, size() - 2);
}

TimeGridPtr make_time_grid(double half_length, int nodes)
{
    return std::make_shared<const TimeGrid>(half_length, nodes);
}

} // namespace kglab
