#pragma once

#include "kglab/grid.hpp"

#include <vector>

namespace kglab {

/// Sign of the regularization in (omega^2 - tau^2 + s i eps)^{-1}. With this
/// time orientation the Feynman kernel is the limit of s = +1.
enum class AbsorptionSign { Feynman = 1, Opposite = -1 };

/// (2 pi)^{-1} int e^{i tau t} (omega^2 - tau^2 + s i eps)^{-1} d tau by
/// adaptive quadrature (breakpoints around the near-poles, oscillatory tail).
cd absorption_kernel(double omega, double eps, double t, AbsorptionSign sign = AbsorptionSign::Feynman,
                     double* error_estimate = nullptr);

/// Closed form of the same integral: s' i e^{i s lambda |t|} / (2 lambda) with
/// lambda = sqrt(omega^2 + s i eps), s' = -s.
cd absorption_kernel_exact(double omega, double eps, double t, AbsorptionSign sign = AbsorptionSign::Feynman);

struct AbsorptionRow {
    double omega = 0.0;
    double eps = 0.0;
    double error = 0.0;           ///< max_{|t| <= t_max} |g_eps - g_F|
    double opposite_error = 0.0;  ///< same, for the opposite sign
    double quadrature_error = 0.0;  ///< max |quadrature - closed form|
    cd g0;                          ///< g_eps(0)
    bool sign_match = false;        ///< sign Im g_eps(0) == sign Im g_F(0)
    double ratio = 0.0;             ///< error / error of the previous eps (0 for the first)
};

struct AbsorptionTable {
    std::vector<AbsorptionRow> rows;
    double max_ratio = 0.0;
    bool pass = false;  ///< all ratios <= 0.7 and all signs match
};

/// Rows for omega = sqrt(k^2 + mu^2) along a decreasing eps list.
/// QuadratureFailure when an integral misses its tolerance.
AbsorptionTable minkowski_absorption_check(double mu, double k, const std::vector<double>& eps, double t_max = 10.0,
                                           double t_step = 0.25);

} // namespace kglab
