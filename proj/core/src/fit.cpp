#include "kglab/fit.hpp"

#include "kglab/error.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>

namespace kglab {

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) sx += x[i], sy += y[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        r += e * e;
    }
    f.rms = std::sqrt(r / n);
    return f;
}

} // namespace

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double floor)
{
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument,
            "power fit needs at least two samples");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(y[i]) > floor && x[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(std::abs(y[i])));
        }
    }
    PowerFit f;
    if (lx.size() < 2) {
        f.degenerate = true;
        f.exponent = kNegInfExponent;
        return f;
    }
    const LineFit l = fit_line(lx, ly);
    f.exponent = l.slope;
    f.log_constant = l.intercept;
    f.residual = l.rms;
    return f;
}

OffsetPowerFit fit_offset_power(const std::vector<double>& x, const std::vector<double>& y,
                                double rho_min, double rho_max)
{
    require(x.size() == y.size() && x.size() >= 4, ErrorCode::InvalidArgument,
            "offset power fit needs at least four samples");
    const std::size_t n = x.size();
    // For fixed rho the model is linear in (c, a).
    auto solve = [&](double rho, double& c, double& a) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = std::pow(x[i], rho);
        const LineFit l = fit_line(p, y);
        c = l.intercept;
        a = l.slope;
        return l.rms;
    };
    auto objective = [&](double rho) {
        double c, a;
        return solve(rho, c, a);
    };
    const auto best = boost::math::tools::brent_find_minima(objective, rho_min, rho_max, 40);
    OffsetPowerFit f;
    f.exponent = best.first;
    const double rms = solve(best.first, f.offset, f.amplitude);
    double lo = y[0], hi = y[0];
    for (double v : y) lo = std::min(lo, v), hi = std::max(hi, v);
    f.residual = hi > lo ? rms / (hi - lo) : 0.0;
    return f;
}

std::vector<double> observed_orders(const std::vector<double>& levels,
                                    const std::vector<double>& errors)
{
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < levels.size(); ++i)
        out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(levels[i] / levels[i + 1]));
    return out;
}

} // namespace kglab
