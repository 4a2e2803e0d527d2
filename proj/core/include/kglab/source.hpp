#pragma once

#include "kglab/field.hpp"

#include <cstdint>

namespace kglab {

/// a * exp(-(t-t0)^2/(2 wt^2) - (x-x0)^2/(2 wx^2)) * exp(i k x)
struct GaussianBump {
    double t0 = 0.0;
    double x0 = 0.0;
    double width_t = 1.0;
    double width_x = 1.0;
    cd amplitude = 1.0;
    double carrier = 0.0;
};

/// Finite sum of Gaussian bumps on a grid.
class Source {
public:
    Source() = default;
    Source(GridPtr grid, std::vector<GaussianBump> bumps);

    static Source gaussian(GridPtr grid, double t0 = 0.0, double x0 = 0.0, double width_t = 1.0,
                           double width_x = 1.0);
    /// Three bumps with centers in |t| <= T/4, |x| <= L/4, widths in [0.7, 1.5],
    /// complex amplitudes and carriers in [-1, 1].
    static Source random_admissible(GridPtr grid, double T, std::uint64_t seed);

    bool empty() const noexcept { return bumps_.empty(); }
    const std::vector<GaussianBump>& bumps() const noexcept { return bumps_; }
    const GridPtr& grid() const noexcept { return grid_; }

    GridFunction operator()(double t) const;
    Eigen::VectorXcd modes(double t) const;
    SpaceTimeField sample(const TimeGridPtr& times) const;
    /// Bound on sup_x |f(t, x)|.
    double envelope(double t) const;

private:
    cd time_factor(std::size_t i, double t) const;

    GridPtr grid_;
    std::vector<GaussianBump> bumps_;
    std::vector<GridFunction> profiles_;
    std::vector<Eigen::VectorXcd> profile_modes_;
};

} // namespace kglab
