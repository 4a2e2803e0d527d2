#include "kglab/analysis.hpp"

#include "kglab/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>

namespace kglab {

std::vector<double> kg_charge(const SpatialGrid& grid, const CauchyTrajectory& psi)
{
    std::vector<double> j(psi.u.size());
    for (int i = 0; i < psi.u.size(); ++i) j[i] = inner(grid, psi.v[i], psi.u[i]).real();
    return j;
}

ChargeReport charge_drift(const SpatialGrid& grid, const CauchyTrajectory& psi, double tol, int first, int last)
{
    ChargeReport rep;
    rep.values = kg_charge(grid, psi);
    const int n = static_cast<int>(rep.values.size());
    if (last < 0) last = n - 1;
    require(0 <= first && first <= last && last < n, ErrorCode::InvalidArgument, "charge range outside the trajectory");
    rep.reference = rep.values[first];
    for (int i = first; i <= last; ++i) rep.drift = std::max(rep.drift, std::abs(rep.values[i] - rep.reference));
    rep.bound = 100.0 * tol * (1.0 + std::abs(rep.reference));
    rep.pass = rep.drift <= rep.bound;
    return rep;
}

MassReport diag_masses(const Transform& transform, const FreePack& pack, const CauchyTrajectory& psi)
{
    const SpatialGrid& grid = *pack.grid;
    const TimeGrid& times = psi.u.times();
    const int J = times.size();
    MassReport rep;
    rep.t = times.nodes();
    rep.q_plus.resize(J);
    rep.q_minus.resize(J);
    rep.energy.resize(J);
    const double h = grid.spacing();
    for (int j = 0; j < J; ++j) {
        const Eigen::VectorXcd u = grid.to_modes(psi.u[j]), v = grid.to_modes(psi.v[j]);
        Eigen::VectorXcd p, q;
        transform.forward_modes(j, u, v, p, q);
        rep.q_plus[j] = h * p.squaredNorm();
        rep.q_minus[j] = h * q.squaredNorm();
        const Eigen::VectorXcd wu = pack.omega.cast<cd>().cwiseProduct(u);
        rep.energy[j] = h * (wu.squaredNorm() + v.squaredNorm());
    }

    const double T = times.node(J - 1);
    for (int side : {1, -1}) {
        std::vector<double> x, yp, ym;
        for (int j = 0; j < J; ++j) {
            const double a = side * rep.t[j];
            if (a >= T / 4 && a <= T) {
                x.push_back(a);
                yp.push_back(rep.q_plus[j]);
                ym.push_back(rep.q_minus[j]);
            }
        }
        require(x.size() >= 8, ErrorCode::WindowTooShort, "fit window [T/4, T] holds fewer than 8 nodes");
        const double lo = *std::min_element(x.begin(), x.end()), hi = *std::max_element(x.begin(), x.end());
        for (const auto& [name, y] : {std::pair{"q+", &yp}, std::pair{"q-", &ym}}) {
            const OffsetPowerFit f = fit_offset_power(x, *y);
            rep.fits.push_back({name, side, lo, hi, f.offset, f.amplitude, f.exponent, f.residual});
        }
    }
    return rep;
}

namespace {

double smooth_step(double x)
{
    return x > 0.0 ? std::exp(-1.0 / x) : 0.0;
}

double smooth_step_derivative(double x)
{
    return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0;
}

} // namespace

double bump(double s)
{
    const double a = std::abs(s);
    const double g = smooth_step(2.0 - a), k = smooth_step(a - 1.0);
    return g / (g + k);
}

double bump_derivative(double s)
{
    const double a = std::abs(s);
    const double g = smooth_step(2.0 - a), k = smooth_step(a - 1.0);
    if (g == 0.0 || k == 0.0) return 0.0;
    // d/da g/(g+k) with g' = -G, k' = K.
    const double G = -smooth_step_derivative(2.0 - a), K = smooth_step_derivative(a - 1.0);
    const double d = (G * k - g * K) / ((g + k) * (g + k));
    return s < 0 ? -d : d;
}

WindowReport window_identity_check(const TimeGrid& times, const MassReport& masses, const std::vector<double>& eps)
{
    const int J = times.size();
    require(static_cast<int>(masses.t.size()) == J, ErrorCode::InvalidArgument, "masses do not match the time grid");
    const double T = times.node(J - 1);
    // c+ - c- at each end; zero where no fit is present.
    double offset[2] = {0.0, 0.0};
    for (const auto& f : masses.fits) offset[f.side > 0 ? 1 : 0] += (f.component == "q+" ? 1.0 : -1.0) * f.constant;
    WindowReport rep;
    std::vector<double> x, y;
    for (double e : eps) {
        require(e > 0.0 && 2.0 / e <= T * (1.0 + 1e-12), ErrorCode::InvalidArgument,
                "window support 2/eps must fit inside [-T, T]");
        double s = 0.0, raw = 0.0;
        for (int j = 0; j < J; ++j) {
            const double t = times.node(j);
            const double w = times.weights()[j] * e * bump_derivative(e * t);
            const double d = masses.q_plus[j] - masses.q_minus[j];
            raw += w * d;
            s += w * (d - offset[t > 0 ? 1 : 0]);
        }
        rep.rows.push_back({e, std::abs(s), std::abs(raw)});
        x.push_back(e);
        y.push_back(std::abs(s));
    }
    if (x.size() >= 2) rep.fit = fit_power_law(x, y);
    return rep;
}

FrequencySplit frequency_split_modes(const FreePack& pack, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v)
{
    const Eigen::VectorXcd wu = pack.omega.cast<cd>().cwiseProduct(u);
    const double plus = (wu + v).squaredNorm(), minus = (wu - v).squaredNorm();
    const double total = plus + minus;
    require(total > 0.0, ErrorCode::ZeroDatum, "frequency split of a zero datum");
    return {plus / total, minus / total};
}

FrequencySplit frequency_split(const FreePack& pack, const CauchyDatum& psi)
{
    return frequency_split_modes(pack, pack.grid->to_modes(psi.u), pack.grid->to_modes(psi.v));
}

double time_frequency_sign(const std::vector<cd>& samples, double dt, double omega)
{
    const int m = static_cast<int>(samples.size());
    require(dt > 0.0 && omega > 0.0, ErrorCode::InvalidArgument, "dt and omega must be positive");
    const double pi = std::acos(-1.0);
    require(m >= 4 && m * dt * omega >= 10.0 * 2.0 * pi, ErrorCode::WindowTooShort,
            "time window spans fewer than 10 periods");
    std::vector<cd> in(m), out(m);
    for (int k = 0; k < m; ++k) in[k] = samples[k] * (0.5 - 0.5 * std::cos(2.0 * pi * (k + 0.5) / m));
    // e^{i tau t} sits at positive bins under the e^{-i} kernel (FFTW_FORWARD).
    fftw_plan plan = fftw_plan_dft_1d(m, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    double pos = 0.0, total = 0.0;
    for (int k = 0; k < m; ++k) {
        const double e = std::norm(out[k]);
        total += e;
        if (k == 0 || 2 * k == m)
            pos += 0.5 * e;
        else if (2 * k < m)
            pos += e;
    }
    require(total > 0.0, ErrorCode::ZeroDatum, "time window is identically zero");
    return pos / total;
}

ConvergenceTable convergence_table(std::string axis, const std::vector<double>& levels,
                                   const std::vector<double>& errors)
{
    require(levels.size() == errors.size() && levels.size() >= 2, ErrorCode::InvalidArgument,
            "convergence table needs at least two levels");
    ConvergenceTable t;
    t.axis = std::move(axis);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        ConvergenceRow r{levels[i], errors[i], 0.0};
        if (i > 0) {
            r.order = std::log(errors[i - 1] / errors[i]) / std::log(levels[i - 1] / levels[i]);
            if (!(errors[i] < errors[i - 1])) t.monotone = false;
        }
        t.rows.push_back(r);
    }
    t.fitted_order = fit_power_law(levels, errors, 0.0).exponent;
    return t;
}

} // namespace kglab
