#pragma once

#include "kglab/grid.hpp"

#include <vector>

namespace kglab {

/// Point values on a SpatialGrid.
using GridFunction = Eigen::VectorXcd;

/// (u, D_t u) with D_t = -i d/dt.
struct CauchyDatum {
    GridFunction u;
    GridFunction v;
};

/// Diagonalized pair: p carries the forward-propagating component, q the other.
struct DiagonalDatum {
    GridFunction p;
    GridFunction q;
};

class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(TimeGridPtr times, int n);
    SpaceTimeField(TimeGridPtr times, std::vector<GridFunction> slices);

    const TimeGrid& times() const { return *times_; }
    const TimeGridPtr& time_grid() const noexcept { return times_; }
    int size() const noexcept { return static_cast<int>(slices_.size()); }
    GridFunction& operator[](int j) { return slices_[j]; }
    const GridFunction& operator[](int j) const { return slices_[j]; }
    const std::vector<GridFunction>& slices() const noexcept { return slices_; }

private:
    TimeGridPtr times_;
    std::vector<GridFunction> slices_;
};

struct CauchyTrajectory {
    SpaceTimeField u;
    SpaceTimeField v;
    CauchyDatum at(int j) const { return {u[j], v[j]}; }
};

struct DiagonalTrajectory {
    SpaceTimeField p;
    SpaceTimeField q;
    DiagonalDatum at(int j) const { return {p[j], q[j]}; }
};

inline double japanese(double t) { return std::sqrt(1.0 + t * t); }

/// h * sum a conj(b): linear in the first slot.
cd inner(const SpatialGrid& grid, const GridFunction& a, const GridFunction& b);
double l2_norm(const SpatialGrid& grid, const GridFunction& u);
double sobolev_norm(const SpatialGrid& grid, const GridFunction& u, double s);

/// (sum_j w_j <t_j>^{2 gamma} ||f(t_j)||_s^2)^{1/2}.
double y_norm(const SpatialGrid& grid, const SpaceTimeField& f, double gamma, double s);

/// Weight exponents in (1/2, 1/2 + delta) are the admissible ones.
bool gamma_admissible(double gamma, double delta) noexcept;

} // namespace kglab
