#pragma once

#include <limits>
#include <vector>

namespace kglab {

/// y ~ C * x^exponent by least squares in log-log coordinates.
struct PowerFit {
    double exponent = 0.0;
    double log_constant = 0.0;
    double residual = 0.0;  ///< rms of log residuals
    bool degenerate = false;  ///< all samples below the noise floor
};

inline constexpr double kNegInfExponent = -std::numeric_limits<double>::infinity();

/// Samples with y <= floor are treated as zero; if all are, the fit reports
/// the -inf sentinel.
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                       double floor = 1e-14);

/// y ~ c + a * x^rho with rho searched in [rho_min, rho_max].
struct OffsetPowerFit {
    double offset = 0.0;
    double amplitude = 0.0;
    double exponent = 0.0;
    double residual = 0.0;  ///< rms residual relative to the spread of y
};

OffsetPowerFit fit_offset_power(const std::vector<double>& x, const std::vector<double>& y,
                                double rho_min = -4.0, double rho_max = -0.05);

/// Successive orders log(e_i/e_{i+1}) / log(l_i/l_{i+1}).
std::vector<double> observed_orders(const std::vector<double>& levels,
                                    const std::vector<double>& errors);

} // namespace kglab
