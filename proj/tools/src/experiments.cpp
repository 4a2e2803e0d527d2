#include "kglab/tools/experiments.hpp"

#include "kglab/absorption.hpp"
#include "kglab/error.hpp"

#include <algorithm>
#include <cmath>

namespace kglab::tools {

namespace {

constexpr double kPi = 3.14159265358979323846;

Json fit_json(const PowerFit& f)
{
    return Json{{"exponent", f.exponent}, {"log_constant", f.log_constant}, {"residual", f.residual},
                {"degenerate", f.degenerate}};
}

Json fit_json(const AsymptoticFit& f)
{
    return Json{{"component", f.component}, {"side", f.side},          {"t_min", f.t_min},
                {"t_max", f.t_max},         {"constant", f.constant},  {"amplitude", f.amplitude},
                {"exponent", f.exponent},   {"residual", f.residual}};
}

BlockMultiplier mode_scaled(const BlockMultiplier& m, const Eigen::VectorXd& w)
{
    const Eigen::VectorXcd c = w.cast<cd>();
    BlockMultiplier r = m;
    r.a = r.a.cwiseProduct(c);
    r.b = r.b.cwiseProduct(c);
    r.c = r.c.cwiseProduct(c);
    r.d = r.d.cwiseProduct(c);
    return r;
}

// |sum_j dt (L_h g)_j phi(t_j) - phi(0)| for the sampled kernel g, the
// three-point operator L_h = D+D- + omega^2 and phi(t) = exp(-t^2).
double kernel_weak_error(double omega, double dt)
{
    const int M = static_cast<int>(std::lround(12.0 / dt));
    auto g = [&](int j) { return free_feynman_mode_kernel(omega, j * dt); };
    cd sum = 0.0;
    for (int j = -M + 1; j <= M - 1; ++j) {
        const cd l = (g(j + 1) - 2.0 * g(j) + g(j - 1)) / (dt * dt) + omega * omega * g(j);
        const double t = j * dt;
        sum += dt * l * std::exp(-t * t);
    }
    return std::abs(sum - 1.0);
}

double trajectory_difference(const FreePack& pack, const CauchyTrajectory& a, const CauchyTrajectory& b)
{
    const SpatialGrid& g = *pack.grid;
    double diff = 0.0, scale = 0.0;
    for (int j = 0; j < a.u.size(); ++j) {
        const Eigen::VectorXcd au = g.to_modes(a.u[j]), av = g.to_modes(a.v[j]);
        const Eigen::VectorXcd bu = g.to_modes(b.u[j]), bv = g.to_modes(b.v[j]);
        diff = std::max(diff, energy_norm_modes(pack, au - bu, av - bv));
        scale = std::max(scale, energy_norm_modes(pack, bu, bv));
    }
    return diff / scale;
}

struct Split {
    double plus = 0.0;
    double energy = 0.0;
};

Split split_at(const FreePack& pack, const CauchyDatum& psi)
{
    const Eigen::VectorXcd u = pack.grid->to_modes(psi.u), v = pack.grid->to_modes(psi.v);
    const double e = energy_norm_modes(pack, u, v);
    if (e == 0.0) return {};
    return {frequency_split_modes(pack, u, v).plus, e};
}

} // namespace

// ---------------------------------------------------------------- Lab

Lab::Lab(ExperimentConfig cfg) : cfg_(std::move(cfg))
{
    grid_ = make_grid(cfg_.grid.N, cfg_.grid.L);
    times_ = make_time_grid(cfg_.timegrid.T, cfg_.timegrid.J);
    family_ = std::make_unique<OperatorFamily>(assemble_A(grid_, times_, cfg_.model.mu, cfg_.perturbation()));
}

Source Lab::source() const
{
    const auto& s = cfg_.source;
    return Source::gaussian(grid_, s.t0, s.x0, s.width_t, s.width_x);
}

const SolverContext& Lab::context()
{
    if (!context_) context_ = std::make_unique<SolverContext>(*family_, construct_B(*family_, cfg_.factor_options()));
    return *context_;
}

namespace {

BvpOptions bvp_options(const ExperimentConfig& c, bool flipped)
{
    BvpOptions o;
    o.stepper.tol = c.solver.stepper_tol;
    o.flipped = flipped;
    o.gamma = c.solver.gamma;
    o.s = c.solver.s;
    return o;
}

} // namespace

const BvpSolver& Lab::bvp()
{
    if (!bvp_) bvp_ = std::make_unique<BvpSolver>(*family_, bvp_options(cfg_, false));
    return *bvp_;
}

const BvpSolver& Lab::anti_bvp()
{
    if (!anti_bvp_) anti_bvp_ = std::make_unique<BvpSolver>(*family_, bvp_options(cfg_, true));
    return *anti_bvp_;
}

const std::vector<Lab::RandomSolve>& Lab::random_solves()
{
    if (!random_) {
        std::vector<RandomSolve> out;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            RandomSolve r;
            r.seed = seed;
            r.source = Source::random_admissible(grid_, cfg_.timegrid.T, seed);
            const ModeSource f = mode_source(r.source);
            r.feynman = feynman_solve(context(), f, solve_options());
            r.bvp = bvp().solve(f);
            r.agreement = inner_window_difference(r.bvp.solution, r.feynman.solution);
            out.push_back(std::move(r));
        }
        random_ = std::move(out);
    }
    return *random_;
}

const CauchySweep& Lab::homogeneous()
{
    if (!homogeneous_) {
        const int n = grid_->size();
        GridFunction p0(n);
        for (int l = 0; l < n; ++l) {
            const double x = grid_->point(l);
            p0[l] = std::exp(-x * x / 8.0) * std::polar(1.0, 0.5 * x);
        }
        const CauchyDatum psi = context().transform().inverse(0, {p0, GridFunction::Zero(n)}, *grid_);
        homogeneous_ = cauchy_sweep(*family_, psi, 0, StepperSpec{.tol = homogeneous_tol()});
    }
    return *homogeneous_;
}

const Lab::PointSolves& Lab::point_solves()
{
    if (!point_) {
        PointSolves p;
        p.source = Source::gaussian(grid_, 0.0, 0.0, 0.5, 0.5);
        const ModeSource f = mode_source(p.source);
        p.feynman = feynman_solve(context(), f, solve_options());
        p.retarded = retarded_solve(context(), f, solve_options());
        point_ = std::move(p);
    }
    return *point_;
}

// ---------------------------------------------------------------- helpers

ModeSource mode_source(const Source& s)
{
    auto shared = std::make_shared<const Source>(s);
    return [shared](double t) { return shared->modes(t); };
}

double inner_window_difference(const CauchyTrajectory& a, const CauchyTrajectory& b)
{
    const TimeGrid& times = b.u.times();
    const double half = 0.5 * times.half_length();
    double diff = 0.0, scale = 0.0;
    for (int j = 0; j < times.size(); ++j) {
        if (std::abs(times.node(j)) > half * (1.0 + 1e-12)) continue;
        diff = std::max(diff, (a.u[j] - b.u[j]).norm());
        scale = std::max(scale, b.u[j].norm());
    }
    return scale > 0.0 ? diff / scale : diff;
}

ChargeReport quiet_charge_drift(const SpatialGrid& grid, const CauchyTrajectory& psi, const Source& f, double tol)
{
    const TimeGrid& times = psi.u.times();
    const int J = times.size();
    int lead = -1, trail = J;
    while (lead + 1 < J && f.envelope(times.node(lead + 1)) == 0.0) ++lead;
    while (trail - 1 >= 0 && f.envelope(times.node(trail - 1)) == 0.0) --trail;
    require(lead >= 1 || trail <= J - 2, ErrorCode::InvalidArgument, "source has no quiet segment on the grid");
    ChargeReport worst;
    worst.pass = true;
    double worst_ratio = -1.0;
    auto take = [&](int first, int last) {
        ChargeReport r = charge_drift(grid, psi, tol, first, last);
        const double ratio = r.drift / r.bound;
        if (ratio > worst_ratio) {
            const bool pass = worst.pass && r.pass;
            worst = std::move(r);
            worst.pass = pass;
            worst_ratio = ratio;
        } else {
            worst.pass = worst.pass && r.pass;
        }
    };
    if (lead >= 1) take(0, lead);
    if (trail <= J - 2) take(trail, J - 1);
    return worst;
}

Json to_json(const SolveReport& r, const Lab& lab)
{
    const auto& c = lab.config();
    return Json{
        {"method", to_string(r.method)},
        {"residual",
         {{"relative", r.residual.relative},
          {"absolute", r.residual.absolute},
          {"source_norm", r.residual.source_norm},
          {"max_defect", r.residual.max_defect}}},
        {"boundary_defects", {{"at_plus", r.defects.at_plus}, {"at_minus", r.defects.at_minus}}},
        {"iterations", r.iterations},
        {"corrections", r.corrections},
        {"contraction", r.contraction},
        {"converged", r.converged},
        {"substeps", r.substeps},
        {"sweep_error", r.sweep_error},
        {"factorization", {{"method", to_string(r.factor_method)}, {"K", r.factor_K}}},
        {"escalation", r.escalation},
        {"grid", {{"N", c.grid.N}, {"L", c.grid.L}, {"h", lab.grid()->spacing()}}},
        {"timegrid", {{"J", c.timegrid.J}, {"T", c.timegrid.T}, {"dt", lab.times()->step()}}},
        {"config_hash", config_hash(c)},
    };
}

Table solution_table(const SpatialGrid& grid, const CauchyTrajectory& psi, const std::string& file)
{
    Table t{file, {"t", "x", "re_u", "im_u"}, {}};
    const TimeGrid& times = psi.u.times();
    t.rows.reserve(static_cast<std::size_t>(times.size()) * grid.size());
    for (int j = 0; j < times.size(); ++j)
        for (int l = 0; l < grid.size(); ++l)
            t.rows.push_back({times.node(j), grid.point(l), psi.u[j][l].real(), psi.u[j][l].imag()});
    return t;
}

std::vector<double> window_eps(double T)
{
    std::vector<double> eps;
    for (double e : {0.4, 0.2, 0.1, 0.05})
        if (2.0 / e <= T * (1.0 + 1e-12)) eps.push_back(e);
    return eps;
}

// ---------------------------------------------------------------- free-check

Outcome free_check(Lab& lab)
{
    const auto& cfg = lab.config();
    const GridPtr& grid = lab.grid();
    const int n = grid->size();
    const FreePack pack = build_free(grid, cfg.model.mu);
    Outcome o;

    // Projection algebra, mode-wise.
    const BlockMultiplier I = BlockMultiplier::identity(n);
    const double alg = 1e-12;
    o.add(check_le("pi.sum_identity", (pack.Pp + pack.Pm - I).norm(), alg));
    o.add(check_le("pi.plus_idempotent", (compose(pack.Pp, pack.Pp) - pack.Pp).norm(), alg));
    o.add(check_le("pi.minus_idempotent", (compose(pack.Pm, pack.Pm) - pack.Pm).norm(), alg));
    o.add(check_le("pi.orthogonal", std::max(compose(pack.Pp, pack.Pm).norm(), compose(pack.Pm, pack.Pp).norm()), alg));
    o.add(check_le("h0.plus_eigenvalue", (compose(pack.H0, pack.Pp) - mode_scaled(pack.Pp, pack.omega)).norm(), alg));
    o.add(check_le("h0.minus_eigenvalue", (compose(pack.H0, pack.Pm) + mode_scaled(pack.Pm, pack.omega)).norm(), alg));
    o.add(check_le("evolution.group_law",
                   (compose(free_evolution(pack, 1.3), free_evolution(pack, -0.4)) - free_evolution(pack, 0.9)).norm(),
                   alg));

    // Sweep form of the diagonal Feynman inverse against the kernel form.
    PerturbationSpec fs = cfg.perturbation();
    fs.potential = false;
    fs.principal = false;
    const OperatorFamily free_family = assemble_A(grid, lab.times(), cfg.model.mu, fs);
    const SolverContext ctx(free_family, construct_B(free_family, cfg.factor_options()));
    const Source src = lab.source();
    const ModeSource g = mode_source(src);
    StepperSpec stepper;
    stepper.tol = cfg.solver.stepper_tol;
    const DiagonalModes d = feynman_apply_diag(ctx, DiagonalSource{g, g, {}}, stepper);
    std::vector<Eigen::VectorXcd> us(d.p.size()), vs(d.p.size());
    for (std::size_t j = 0; j < d.p.size(); ++j)
        ctx.transform().inverse_modes(static_cast<int>(j), d.p[j], d.q[j], us[j], vs[j]);
    const CauchyTrajectory sweep = to_trajectory(*grid, lab.times(), us, vs);
    const CauchyTrajectory kernel = free_diag_feynman_apply(
        pack, lab.times(), [&](double t) { return CauchyDatum{GridFunction::Zero(n), src(t)}; });
    const double agreement = trajectory_difference(pack, sweep, kernel);
    o.add(check_le("apply.sweep_vs_kernel", agreement, 1e-7));
    o.results["apply"] = {{"relative_difference", agreement}, {"substeps", d.substeps}, {"sweep_error", d.error_estimate}};

    // Sampled mode kernel against the discrete delta.
    const double omega = std::sqrt(1.0 + cfg.model.mu * cfg.model.mu);
    std::vector<double> dts{0.1, 0.05, 0.025, 0.0125}, errs;
    for (double dt : dts) errs.push_back(kernel_weak_error(omega, dt));
    const ConvergenceTable kt = convergence_table("dt", dts, errs);
    o.add(check_in("kernel.discrete_equation_order", kt.fitted_order, 1.7, 2.3));
    Table tab{"kernel_order.csv", {"dt", "error", "order"}, {}};
    for (const auto& r : kt.rows) tab.rows.push_back({r.level, r.error, r.order});
    o.tables.push_back(std::move(tab));
    o.results["kernel"] = {{"omega", omega}, {"fitted_order", kt.fitted_order}, {"errors", errs}, {"dt", dts}};
    return o;
}

// ---------------------------------------------------------------- factorize

namespace {

Outcome remainder_outcome(const FactorizationResult& F, double delta, const std::string& prefix)
{
    Outcome o;
    if (F.method == FactorMethod::Riccati && !F.riccati_fell_back) {
        o.add(check_le(prefix + "remainder.max_relative", F.max_relative_remainder, 1e-8));
    } else {
        o.add(check_le(prefix + "remainder.exponent", F.remainder_fit.exponent, -(1.0 + delta) + 0.3));
    }
    o.add(check_ge(prefix + "hermitian_part.min", F.min_hermitian, F.floor));
    o.results = {
        {"method", to_string(F.method)},
        {"K", F.K},
        {"floor", F.floor},
        {"floor_applied", F.floor_applied},
        {"riccati_fell_back", F.riccati_fell_back},
        {"riccati_substeps", F.riccati_substeps},
        {"max_relative_remainder", F.max_relative_remainder},
        {"remainder_fit", fit_json(F.remainder_fit)},
        {"smoothing_proxy", F.smoothing_proxy},
        {"min_hermitian", F.min_hermitian},
        {"fd_order", F.fd_order},
    };
    return o;
}

} // namespace

Outcome factorize(Lab& lab)
{
    const auto& cfg = lab.config();
    const FactorizationResult& F = lab.context().factor();
    Outcome o = remainder_outcome(F, cfg.model.delta, "");
    const TimeGrid& times = *lab.times();
    Table rem{"remainder.csv", {"t", "norm_R", "norm_A"}, {}};
    for (int j = 0; j < times.size(); ++j) rem.rows.push_back({times.node(j), F.remainder_norm[j], F.a_norm[j]});
    o.tables.push_back(std::move(rem));
    Table fit{"remainder_fit.csv", {"t", "norm_R"}, {}};
    for (std::size_t i = 0; i < F.fit_t.size(); ++i) fit.rows.push_back({F.fit_t[i], F.fit_norm[i]});
    o.tables.push_back(std::move(fit));

    const DecayReport decay = decay_certificate(lab.family(), cfg.model.delta);
    o.add(check_le("decay.A_exponent", decay.fit_A.exponent, decay.threshold_A));
    o.add(check_le("decay.dA_exponent", decay.fit_dA.exponent, decay.threshold_dA));
    Table dt{"decay.csv", {"t", "norm_A_minus_A0", "norm_dA"}, {}};
    for (std::size_t i = 0; i < decay.t.size(); ++i) dt.rows.push_back({decay.t[i], decay.norm_A[i], decay.norm_dA[i]});
    o.tables.push_back(std::move(dt));
    o.results["decay"] = {{"fit_A", fit_json(decay.fit_A)}, {"fit_dA", fit_json(decay.fit_dA)}};
    o.documents.emplace_back("fits.json", Json{{"remainder_fit", fit_json(F.remainder_fit)},
                                               {"decay_fit_A", fit_json(decay.fit_A)},
                                               {"decay_fit_dA", fit_json(decay.fit_dA)}});
    return o;
}

// ---------------------------------------------------------------- solve

Outcome solve(Lab& lab, SolveMethod method)
{
    const auto& cfg = lab.config();
    const ModeSource f = mode_source(lab.source());
    const SolveOptions opts = lab.solve_options();
    SolveReport r;
    switch (method) {
    case SolveMethod::Feynman: r = feynman_solve_escalating(lab.family(), f, opts, cfg.factor_options()); break;
    case SolveMethod::Retarded: r = retarded_solve(lab.context(), f, opts); break;
    case SolveMethod::Advanced: r = advanced_solve(lab.context(), f, opts); break;
    case SolveMethod::Bvp: r = lab.bvp().solve(f); break;
    }
    Outcome o;
    o.add(check_le("residual.relative", r.residual.relative, 10.0 * opts.tol));
    if (method == SolveMethod::Bvp) {
        o.add(check_le("boundary_defects.max", std::max(r.defects.at_plus, r.defects.at_minus), 1e-3));
    } else {
        o.add(check_ge("converged", r.converged ? 1.0 : 0.0, 1.0));
    }
    o.results = to_json(r, lab);
    o.documents.emplace_back("solve_report.json", o.results);
    o.tables.push_back(solution_table(*lab.grid(), r.solution, "solution.csv"));
    return o;
}

// ---------------------------------------------------------------- asymptotics

Outcome asymptotics(Lab& lab)
{
    const auto& cfg = lab.config();
    const double delta = cfg.model.delta;
    const SolverContext& ctx = lab.context();
    const CauchySweep& h = lab.homogeneous();
    const MassReport m = diag_masses(ctx.transform(), ctx.free_pack(), h.trajectory);
    const std::vector<double> eps = window_eps(cfg.timegrid.T);
    require(eps.size() >= 2, ErrorCode::InvalidArgument, "T admits fewer than two window widths");
    const WindowReport w = window_identity_check(*lab.times(), m, eps);
    const ChargeReport charge = charge_drift(*lab.grid(), h.trajectory, lab.homogeneous_tol());

    Outcome o;
    for (const auto& f : m.fits)
        if (f.component == "q+" && f.side > 0) o.add(check_in("rate.q_plus_future", f.exponent, 1.0 - delta - 0.3, 1.0 - delta + 0.3));
    o.add(check_in("window.exponent", w.fit.exponent, delta - 1.0 - 0.4, delta - 1.0 + 0.4));
    double leak = 0.0, factor = 1.0;
    for (std::size_t j = 0; j < m.t.size(); ++j) {
        leak = std::max(leak, m.q_minus[j] / m.q_plus[j]);
        const double r = (m.q_plus[j] + m.q_minus[j]) / m.energy[j];
        factor = std::max({factor, r, 1.0 / r});
    }
    o.add(check_le("masses.component_leak", leak, 0.02));
    o.add(check_le("masses.energy_factor", factor, 4.0));
    o.add(check_le("charge.drift", charge.drift, charge.bound));

    Table mt{"masses.csv", {"t", "q_plus", "q_minus"}, {}};
    for (std::size_t j = 0; j < m.t.size(); ++j) mt.rows.push_back({m.t[j], m.q_plus[j], m.q_minus[j]});
    o.tables.push_back(std::move(mt));
    Table wt{"window.csv", {"eps", "S", "S_raw"}, {}};
    for (const auto& r : w.rows) wt.rows.push_back({r.eps, r.S, r.S_raw});
    o.tables.push_back(std::move(wt));

    Json fits = Json::array();
    for (const auto& f : m.fits) fits.push_back(fit_json(f));
    const Json summary{{"mass_fits", fits}, {"window_fit", fit_json(w.fit)}, {"expected_rate", 1.0 - delta},
                       {"expected_window_exponent", delta - 1.0}};
    o.documents.emplace_back("fits.json", summary);
    o.results = summary;
    o.results["substeps"] = h.substeps;
    o.results["sweep_error"] = h.error_estimate;
    o.results["charge"] = {{"reference", charge.reference}, {"drift", charge.drift}, {"bound", charge.bound}};
    return o;
}

// ---------------------------------------------------------------- microlocal

Outcome microlocal(Lab& lab)
{
    const auto& cfg = lab.config();
    const double T = cfg.timegrid.T;
    const TimeGrid& times = *lab.times();
    const SolverContext& ctx = lab.context();
    const FreePack& pack = ctx.free_pack();
    const Lab::PointSolves& ps = lab.point_solves();
    const CauchyTrajectory& fe = ps.feynman.solution;
    const CauchyTrajectory& re = ps.retarded.solution;

    Outcome o;
    const int jp = times.nearest(T / 2), jm = times.nearest(-T / 2);
    const FrequencySplit fp = frequency_split(pack, fe.at(jp)), fm = frequency_split(pack, fe.at(jm));
    const FrequencySplit rp = frequency_split(pack, re.at(jp));
    o.add(check_ge("feynman.plus_fraction_future", fp.plus, 0.99));
    o.add(check_ge("feynman.minus_fraction_past", fm.minus, 0.99));
    o.add(check_in("retarded.plus_fraction_future", rp.plus, 0.2, 0.8));

    Table tab{"microlocal.csv", {"t", "feynman_plus", "feynman_minus", "retarded_plus", "retarded_minus"}, {}};
    double sum_defect = 0.0;
    for (int j = 0; j < times.size(); ++j) {
        const Split a = split_at(pack, fe.at(j)), b = split_at(pack, re.at(j));
        if (a.energy == 0.0 || b.energy == 0.0) continue;
        const FrequencySplit s = frequency_split(pack, fe.at(j));
        sum_defect = std::max(sum_defect, std::abs(s.plus + s.minus - 1.0));
        tab.rows.push_back({times.node(j), a.plus, 1.0 - a.plus, b.plus, 1.0 - b.plus});
    }
    o.add(check_le("split.sum_defect", sum_defect, 1e-12));
    o.tables.push_back(std::move(tab));

    // Time-frequency sign of single diagonal modes of the Feynman solution:
    // component 1 on [T/4, T], component 2 on [-T, -T/4].
    const int a0 = times.nearest(T / 4), a1 = times.size() - 1;
    const int b0 = 0, b1 = times.nearest(-T / 4);
    const double span = times.node(a1) - times.node(a0);
    const double omega_min = 2.0 * kPi * 10.0 / span * (1.0 + 1e-9);
    Eigen::VectorXcd p_ref, q_ref;
    ctx.transform().forward_modes(jp, lab.grid()->to_modes(fe.u[jp]), lab.grid()->to_modes(fe.v[jp]), p_ref, q_ref);
    Eigen::VectorXcd p_past, q_past;
    ctx.transform().forward_modes(jm, lab.grid()->to_modes(fe.u[jm]), lab.grid()->to_modes(fe.v[jm]), p_past, q_past);
    auto pick = [&](const Eigen::VectorXcd& c) {
        int best = -1;
        for (int i = 0; i < c.size(); ++i)
            if (pack.omega[i] >= omega_min && (best < 0 || std::abs(c[i]) > std::abs(c[best]))) best = i;
        require(best >= 0, ErrorCode::WindowTooShort, "no mode completes 10 periods in the late window");
        return best;
    };
    const int kp = pick(p_ref), kq = pick(q_past);
    std::vector<cd> zp, zq;
    for (int j = a0; j <= a1; ++j) {
        Eigen::VectorXcd p, q;
        ctx.transform().forward_modes(j, lab.grid()->to_modes(fe.u[j]), lab.grid()->to_modes(fe.v[j]), p, q);
        zp.push_back(p[kp]);
    }
    for (int j = b0; j <= b1; ++j) {
        Eigen::VectorXcd p, q;
        ctx.transform().forward_modes(j, lab.grid()->to_modes(fe.u[j]), lab.grid()->to_modes(fe.v[j]), p, q);
        zq.push_back(q[kq]);
    }
    const double sp = time_frequency_sign(zp, times.step(), pack.omega[kp]);
    const double sq = time_frequency_sign(zq, times.step(), pack.omega[kq]);
    o.add(check_ge("time_frequency.component1_future", sp, 0.95));
    o.add(check_le("time_frequency.component2_past", sq, 0.05));

    o.results = {
        {"feynman", {{"plus_future", fp.plus}, {"minus_past", fm.minus}, {"residual", ps.feynman.residual.relative}}},
        {"retarded", {{"plus_future", rp.plus}, {"residual", ps.retarded.residual.relative}}},
        {"time_frequency",
         {{"component1", {{"omega", pack.omega[kp]}, {"positive_fraction", sp}}},
          {"component2", {{"omega", pack.omega[kq]}, {"positive_fraction", sq}}}}},
        {"nodes", {{"future", jp}, {"past", jm}}},
    };
    return o;
}

// ---------------------------------------------------------------- laplim

Outcome laplim(Lab& lab)
{
    const double mu = lab.config().model.mu;
    const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
    Outcome o;
    Table tab{"laplim.csv", {"omega", "eps", "error", "opposite_error", "quadrature_error", "ratio", "im_g0"}, {}};
    Json rows = Json::array();
    for (double omega : {1.0, 2.0, 5.0}) {
        if (omega < mu) {
            o.warnings.push_back("omega = " + format_double(omega) + " lies below the mass; skipped");
            continue;
        }
        const AbsorptionTable t = minkowski_absorption_check(mu, std::sqrt(omega * omega - mu * mu), eps);
        const std::string key = "omega_" + format_double(omega);
        o.add(check_le(key + ".max_ratio", t.max_ratio, 0.7));
        bool signs = true;
        double quad = 0.0;
        for (const auto& r : t.rows) {
            signs = signs && r.sign_match;
            quad = std::max(quad, r.quadrature_error);
            tab.rows.push_back({r.omega, r.eps, r.error, r.opposite_error, r.quadrature_error, r.ratio, r.g0.imag()});
            rows.push_back({{"omega", r.omega}, {"eps", r.eps}, {"error", r.error}, {"ratio", r.ratio}});
        }
        o.add(check_ge(key + ".sign_match", signs ? 1.0 : 0.0, 1.0));
        o.add(check_le(key + ".quadrature_vs_closed_form", quad, 1e-8));
        if (omega == 1.0) o.add(check_le(key + ".error_at_eps_0.1", t.rows.front().error, 0.2));
    }
    o.tables.push_back(std::move(tab));
    o.results = {{"eps", eps}, {"rows", rows}};
    return o;
}

// ---------------------------------------------------------------- converge

std::string_view to_string(Axis a) noexcept
{
    switch (a) {
    case Axis::Dt: return "dt";
    case Axis::H: return "h";
    case Axis::T: return "T";
    }
    return "dt";
}

Axis parse_axis(std::string_view name)
{
    for (Axis a : {Axis::Dt, Axis::H, Axis::T})
        if (to_string(a) == name) return a;
    fail(ErrorCode::InvalidArgument, "unknown refinement axis '" + std::string(name) + "'");
}

namespace {

Outcome table_outcome(const ConvergenceTable& t, const std::string& file)
{
    Outcome o;
    Table tab{file, {t.axis, "error", "order"}, {}};
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        tab.rows.push_back({r.level, r.error, r.order});
        rows.push_back({{"level", r.level}, {"error", r.error}, {"order", r.order}});
    }
    o.tables.push_back(std::move(tab));
    o.results = {{"axis", t.axis}, {"rows", rows}, {"fitted_order", t.fitted_order}, {"monotone", t.monotone}};
    if (!t.monotone) o.warnings.push_back("errors are not monotone along the " + t.axis + " levels");
    return o;
}

// Free Feynman kernel applied to node samples (trapezoid) against the
// Gauss-Legendre quadrature of the continuous source, on coarsened time grids.
Outcome converge_dt(Lab& lab)
{
    const auto& cfg = lab.config();
    const FreePack pack = build_free(lab.grid(), cfg.model.mu);
    const Source src = lab.source();
    const int n = lab.grid()->size();
    std::vector<double> levels, errors;
    for (int k = 3; k >= 0; --k) {
        const int div = 1 << k;
        const int steps = cfg.timegrid.J - 1;
        if (steps % (2 * div) != 0) continue;
        const TimeGridPtr tg = make_time_grid(cfg.timegrid.T, steps / div + 1);
        std::vector<GridFunction> zero(tg->size(), GridFunction::Zero(n)), gv;
        for (double t : tg->nodes()) gv.push_back(src(t));
        const CauchyTrajectory sampled{SpaceTimeField(tg, zero), SpaceTimeField(tg, gv)};
        const CauchyTrajectory trap = free_diag_feynman_apply(pack, sampled);
        const CauchyTrajectory exact = free_diag_feynman_apply(
            pack, tg, [&](double t) { return CauchyDatum{GridFunction::Zero(n), src(t)}; });
        levels.push_back(tg->step());
        errors.push_back(trajectory_difference(pack, trap, exact));
    }
    require(levels.size() >= 3, ErrorCode::InvalidArgument, "J - 1 must be divisible by 8 for the dt study");
    const ConvergenceTable t = convergence_table("dt", levels, errors);
    Outcome o = table_outcome(t, "converge_dt.csv");
    o.add(check_in("dt.fitted_order", t.fitted_order, 1.7, 2.3));
    return o;
}

// Feynman solutions on coarser spatial grids against the configured one,
// compared mode by mode (unitary coefficients scaled by sqrt(h)).
Outcome converge_h(Lab& lab)
{
    const auto& cfg = lab.config();
    const SolveOptions opts = lab.solve_options();
    const int N = cfg.grid.N;
    const SpatialGrid& fine = *lab.grid();
    const SolveReport ref = feynman_solve(lab.context(), mode_source(lab.source()), opts);
    std::vector<int> sizes;
    for (int num : {3, 4, 5, 6}) {
        const int m = 2 * ((num * N / 8 + 1) / 2);
        if (m >= 8 && m < N && (sizes.empty() || sizes.back() != m)) sizes.push_back(m);
    }
    require(sizes.size() >= 3, ErrorCode::InvalidArgument, "N too small for the h study");
    std::vector<double> levels, errors;
    const int J = lab.times()->size();
    for (int m : sizes) {
        ExperimentConfig c = cfg;
        c.grid.N = m;
        Lab sub(c);
        const SolveReport r = feynman_solve(sub.context(), mode_source(sub.source()), opts);
        const SpatialGrid& coarse = *sub.grid();
        const double sc = std::sqrt(coarse.spacing()), sf = std::sqrt(fine.spacing());
        double diff = 0.0, scale = 0.0;
        for (int j = 0; j < J; ++j) {
            const Eigen::VectorXcd a = coarse.to_modes(r.solution.u[j]) * sc;
            const Eigen::VectorXcd b = fine.to_modes(ref.solution.u[j]) * sf;
            Eigen::VectorXcd pad = Eigen::VectorXcd::Zero(N);
            for (int i = 0; i < m; ++i) {
                const int k = coarse.signed_index(i);
                if (k != -m / 2) pad[fine.fft_index(k)] = a[i];
            }
            diff = std::max(diff, (pad - b).norm());
            scale = std::max(scale, b.norm());
        }
        levels.push_back(coarse.spacing());
        errors.push_back(diff / scale);
    }
    const ConvergenceTable t = convergence_table("h", levels, errors);
    Outcome o = table_outcome(t, "converge_h.csv");
    o.add(check_ge("h.fitted_order", t.fitted_order, 4.0));
    o.results["reference_N"] = N;
    return o;
}

// Boundary defects of feynman_solve with the diagonal end conditions for
// T/2, T, 2T at fixed dt.
Outcome converge_T(Lab& lab)
{
    const auto& cfg = lab.config();
    SolveOptions opts = lab.solve_options();
    opts.boundary = FeynmanBoundary::Diagonal;
    const int steps = cfg.timegrid.J - 1;
    require(steps % 4 == 0, ErrorCode::InvalidArgument, "J - 1 must be divisible by 4 for the T study");
    Table tab{"converge_T.csv", {"T", "defect_plus", "defect_minus", "defect", "ratio"}, {}};
    Json rows = Json::array();
    Outcome o;
    double prev = 0.0;
    for (int k : {1, 2, 4}) {
        const double T = 0.5 * k * cfg.timegrid.T;
        SolveReport r;
        if (k == 2) {
            r = feynman_solve(lab.context(), mode_source(lab.source()), opts);
        } else {
            ExperimentConfig c = cfg;
            c.timegrid.T = T;
            c.timegrid.J = steps * k / 2 + 1;
            Lab sub(c);
            r = feynman_solve(sub.context(), mode_source(sub.source()), opts);
        }
        const double d = std::max(r.defects.at_plus, r.defects.at_minus);
        const double ratio = prev > 0.0 ? d / prev : 0.0;
        if (prev > 0.0) o.add(check_le("T.defect_ratio_" + format_double(T), ratio, 0.6));
        tab.rows.push_back({T, r.defects.at_plus, r.defects.at_minus, d, ratio});
        rows.push_back({{"T", T},
                        {"defect_plus", r.defects.at_plus},
                        {"defect_minus", r.defects.at_minus},
                        {"ratio", ratio},
                        {"residual", r.residual.relative},
                        {"iterations", r.iterations}});
        prev = d;
    }
    o.tables.push_back(std::move(tab));
    o.results = {{"axis", "T"}, {"boundary", "diagonal"}, {"rows", rows}};
    return o;
}

} // namespace

Outcome converge(Lab& lab, Axis axis)
{
    switch (axis) {
    case Axis::Dt: return converge_dt(lab);
    case Axis::H: return converge_h(lab);
    case Axis::T: return converge_T(lab);
    }
    return {};
}

} // namespace kglab::tools
