#include "kglab/field.hpp"

#include "kglab/error.hpp"

#include <cmath>

namespace kglab {

SpaceTimeField::SpaceTimeField(TimeGridPtr times, int n)
    : times_(std::move(times))
{
    slices_.assign(times_->size(), GridFunction::Zero(n));
}

SpaceTimeField::SpaceTimeField(TimeGridPtr times, std::vector<GridFunction> slices)
    : times_(std::move(times)), slices_(std::move(slices))
{
    require(static_cast<int>(slices_.size()) == times_->size(), ErrorCode::InvalidArgument,
            "slice count must equal the number of time nodes");
}

cd inner(const SpatialGrid& grid, const GridFunction& a, const GridFunction& b)
{
    // Eigen's dot conjugates its left argument.
    return grid.spacing() * b.dot(a);
}

double l2_norm(const SpatialGrid& grid, const GridFunction& u)
{
    return std::sqrt(grid.spacing()) * u.norm();
}

double sobolev_norm(const SpatialGrid& grid, const GridFunction& u, double s)
{
    const Eigen::VectorXcd c = grid.to_modes(u);
    const Eigen::VectorXd& k = grid.modes();
    double acc = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        acc += std::pow(1.0 + k[i] * k[i], s) * std::norm(c[i]);
    return std::sqrt(grid.spacing() * acc);
}

double y_norm(const SpatialGrid& grid, const SpaceTimeField& f, double gamma, double s)
{
    const auto& tg = f.times();
    double acc = 0.0;
    for (int j = 0; j < f.size(); ++j) {
        const double n = sobolev_norm(grid, f[j], s);
        acc += tg.weights()[j] * std::pow(japanese(tg.node(j)), 2.0 * gamma) * n * n;
    }
    return std::sqrt(acc);
}

bool gamma_admissible(double gamma, double delta) noexcept
{
    return gamma > 0.5 && gamma < 0.5 + delta;
}

} // namespace kglab
