#pragma once

#include "kglab/grid.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace kgtest {

using kglab::cd;
inline constexpr double pi = std::numbers::pi;

inline Eigen::VectorXcd random_vector(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = cd(g(rng), g(rng));
    return v;
}

inline Eigen::MatrixXcd random_matrix(int n, std::mt19937_64& rng)
{
    Eigen::MatrixXcd m(n, n);
    for (int c = 0; c < n; ++c) m.col(c) = random_vector(n, rng);
    return m;
}

inline double wavenumber(int i, int n, double L)
{
    return pi * (i < n / 2 ? i : i - n) / L;
}

// Unitary DFT written out entry by entry: row i is the mode with wavenumber
// k_i, columns are grid points; phases are taken from the first point.
inline Eigen::MatrixXcd dft_matrix(const kglab::SpatialGrid& g)
{
    const int n = g.size();
    Eigen::MatrixXcd f(n, n);
    for (int i = 0; i < n; ++i) {
        const int j = i < n / 2 ? i : i - n;
        const double k = pi * j / g.half_length();
        for (int l = 0; l < n; ++l) {
            const double x = l * 2.0 * g.half_length() / n;
            f(i, l) = std::polar(1.0 / std::sqrt(double(n)), -k * x);
        }
    }
    return f;
}

inline double rel(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace kgtest
