#include "kglab/absorption.hpp"

#include "kglab/error.hpp"
#include "kglab/free_theory.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include <algorithm>
#include <cmath>

namespace kglab {

namespace {

constexpr double kTol = 1e-11;

struct Symbol {
    double omega2;
    double s_eps;
    double re(double tau) const
    {
        const double a = omega2 - tau * tau;
        return a / (a * a + s_eps * s_eps);
    }
    double im(double tau) const
    {
        const double a = omega2 - tau * tau;
        return -s_eps / (a * a + s_eps * s_eps);
    }
};

double finite_piece(const std::function<double(double)>& f, const std::vector<double>& cuts, double& err)
{
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double e = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 20, kTol, &e);
        err += e;
    }
    return total;
}

} // namespace

cd absorption_kernel(double omega, double eps, double t, AbsorptionSign sign, double* error_estimate)
{
    require(omega > 0.0 && eps > 0.0, ErrorCode::InvalidArgument, "omega and eps must be positive");
    const double pi = boost::math::constants::pi<double>();
    const double s = static_cast<double>(static_cast<int>(sign));
    const Symbol h{omega * omega, s * eps};
    t = std::abs(t);  // the integrand is even in tau

    // Near-pole width eps / (2 omega); breakpoints at geometric offsets.
    const double w = eps / (2.0 * omega);
    const double cut = 2.0 * omega + 10.0;
    std::vector<double> cuts{0.0, cut};
    for (double k : {0.5, 2.0, 8.0, 32.0, 128.0})
        for (double side : {-1.0, 1.0}) {
            const double b = omega + side * k * w;
            if (b > 0.0 && b < cut) cuts.push_back(b);
        }
    cuts.push_back(omega);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double err = 0.0;
    const double re_in = finite_piece([&](double x) { return std::cos(x * t) * h.re(x); }, cuts, err);
    const double im_in = finite_piece([&](double x) { return std::cos(x * t) * h.im(x); }, cuts, err);

    double re_tail = 0.0, im_tail = 0.0;
    if (t == 0.0) {
        boost::math::quadrature::exp_sinh<double> es;
        double e1 = 0.0, e2 = 0.0;
        re_tail = es.integrate([&](double x) { return h.re(x); }, cut, std::numeric_limits<double>::infinity(), kTol, &e1);
        im_tail = es.integrate([&](double x) { return h.im(x); }, cut, std::numeric_limits<double>::infinity(), kTol, &e2);
        err += e1 * std::abs(re_tail) + e2 * std::abs(im_tail);
    } else {
        // int_cut^inf cos(x t) g(x) dx = cos(cut t) C - sin(cut t) S, with C, S
        // the cosine and sine transforms of g(cut + .).
        boost::math::quadrature::ooura_fourier_cos<double> oc(1e-10);
        boost::math::quadrature::ooura_fourier_sin<double> os(1e-10);
        auto gre = [&](double x) { return h.re(x + cut); };
        auto gim = [&](double x) { return h.im(x + cut); };
        const auto cr = oc.integrate(gre, t), sr = os.integrate(gre, t);
        const auto ci = oc.integrate(gim, t), si = os.integrate(gim, t);
        const double c = std::cos(cut * t), sn = std::sin(cut * t);
        re_tail = c * cr.first - sn * sr.first;
        im_tail = c * ci.first - sn * si.first;
        err += std::abs(cr.first) * cr.second + std::abs(sr.first) * sr.second + std::abs(ci.first) * ci.second +
               std::abs(si.first) * si.second;
    }
    const cd g = cd(re_in + re_tail, im_in + im_tail) / pi;
    err /= pi;
    if (error_estimate) *error_estimate = err;
    require(std::isfinite(std::abs(g)) && err <= 1e-6 * std::max(1.0, std::abs(g)), ErrorCode::QuadratureFailure,
            "absorption quadrature missed its tolerance");
    return g;
}

cd absorption_kernel_exact(double omega, double eps, double t, AbsorptionSign sign)
{
    const double s = static_cast<double>(static_cast<int>(sign));
    const cd I(0.0, 1.0);
    const cd lambda = std::sqrt(cd(omega * omega, s * eps));
    return -s * I * std::exp(s * I * lambda * std::abs(t)) / (2.0 * lambda);
}

AbsorptionTable minkowski_absorption_check(double mu, double k, const std::vector<double>& eps, double t_max,
                                           double t_step)
{
    require(!eps.empty(), ErrorCode::InvalidArgument, "eps list is empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        require(eps[i] > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
        require(i == 0 || eps[i] < eps[i - 1], ErrorCode::InvalidArgument, "eps list must decrease");
    }
    require(mu > 0.0 && t_max > 0.0 && t_step > 0.0, ErrorCode::InvalidArgument, "mu, t_max, t_step must be positive");
    const double omega = std::sqrt(k * k + mu * mu);
    const int nt = static_cast<int>(std::floor(t_max / t_step + 1e-9));
    AbsorptionTable table;
    table.pass = true;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        AbsorptionRow row;
        row.omega = omega;
        row.eps = eps[i];
        for (int j = 0; j <= nt; ++j) {
            const double t = j * t_step;
            const cd gf = free_feynman_mode_kernel(omega, t);
            const cd g = absorption_kernel(omega, eps[i], t);
            const cd go = absorption_kernel(omega, eps[i], t, AbsorptionSign::Opposite);
            row.error = std::max(row.error, std::abs(g - gf));
            row.opposite_error = std::max(row.opposite_error, std::abs(go - gf));
            row.quadrature_error = std::max(row.quadrature_error, std::abs(g - absorption_kernel_exact(omega, eps[i], t)));
            if (j == 0) {
                row.g0 = g;
                row.sign_match = (g.imag() > 0) == (gf.imag() > 0);
            }
        }
        if (i > 0) {
            row.ratio = row.error / table.rows.back().error;
            table.max_ratio = std::max(table.max_ratio, row.ratio);
            table.pass = table.pass && row.ratio <= 0.7;
        }
        table.pass = table.pass && row.sign_match;
        table.rows.push_back(row);
    }
    return table;
}

} // namespace kglab
