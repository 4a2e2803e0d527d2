#include "kglab/source.hpp"

#include "kglab/error.hpp"

#include <cmath>
#include <random>

namespace kglab {

Source::Source(GridPtr grid, std::vector<GaussianBump> bumps)
    : grid_(std::move(grid)), bumps_(std::move(bumps))
{
    const int n = grid_->size();
    for (const auto& b : bumps_) {
        require(b.width_t > 0 && b.width_x > 0, ErrorCode::InvalidArgument, "source widths must be positive");
        GridFunction prof(n);
        for (int l = 0; l < n; ++l) {
            const double x = grid_->point(l);
            const double sx = (x - b.x0) / b.width_x;
            prof[l] = std::exp(-0.5 * sx * sx) * std::polar(1.0, b.carrier * x);
        }
        profile_modes_.push_back(grid_->to_modes(prof));
        profiles_.push_back(std::move(prof));
    }
}

cd Source::time_factor(std::size_t i, double t) const
{
    const GaussianBump& b = bumps_[i];
    const double st = (t - b.t0) / b.width_t;
    const double et = 0.5 * st * st;
    // Below e^-50 the factor is zero to working precision; cutting it keeps
    // the sweeps out of subnormal arithmetic.
    return et > 50.0 ? cd(0.0) : b.amplitude * std::exp(-et);
}

Source Source::gaussian(GridPtr grid, double t0, double x0, double width_t, double width_x)
{
    return Source(std::move(grid), {GaussianBump{t0, x0, width_t, width_x, 1.0, 0.0}});
}

Source Source::random_admissible(GridPtr grid, double T, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const double L = grid->half_length();
    std::uniform_real_distribution<double> ut(-T / 4, T / 4), ux(-L / 4, L / 4), uw(0.7, 1.5),
        ua(-1.0, 1.0);
    std::vector<GaussianBump> bumps;
    for (int i = 0; i < 3; ++i) {
        GaussianBump b;
        b.t0 = ut(rng);
        b.x0 = ux(rng);
        b.width_t = uw(rng);
        b.width_x = uw(rng);
        const double re = ua(rng), im = ua(rng);
        b.amplitude = cd(re, im);
        b.carrier = ua(rng);
        bumps.push_back(b);
    }
    return Source(std::move(grid), std::move(bumps));
}

GridFunction Source::operator()(double t) const
{
    GridFunction f = GridFunction::Zero(grid_->size());
    for (std::size_t i = 0; i < bumps_.size(); ++i) f += time_factor(i, t) * profiles_[i];
    return f;
}

Eigen::VectorXcd Source::modes(double t) const
{
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(grid_->size());
    for (std::size_t i = 0; i < bumps_.size(); ++i) f += time_factor(i, t) * profile_modes_[i];
    return f;
}

SpaceTimeField Source::sample(const TimeGridPtr& times) const
{
    std::vector<GridFunction> slices;
    slices.reserve(times->size());
    for (double t : times->nodes()) slices.push_back((*this)(t));
    return SpaceTimeField(times, std::move(slices));
}

double Source::envelope(double t) const
{
    double e = 0.0;
    for (std::size_t i = 0; i < bumps_.size(); ++i) e += std::abs(time_factor(i, t));
    return e;
}

} // namespace kglab
