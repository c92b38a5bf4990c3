#include "quench/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "quench/errors.hpp"

namespace quench {

namespace {

constexpr int kRunsPerField = 100;
constexpr FieldKind kFields[] = {FieldKind::F1, FieldKind::F2, FieldKind::F3};

bool parallel_enabled() {
    const char* v = std::getenv("QUENCH_NO_PARALLEL");
    return v == nullptr || v[0] == '\0' || std::string(v) == "0";
}

std::string worst_detail(const char* what, double margin, int run) {
    char buf[160];
    if (run >= 0)
        std::snprintf(buf, sizeof buf, "%s: worst margin %.3e (run %d)", what, margin, run);
    else
        std::snprintf(buf, sizeof buf, "%s: worst margin %.3e", what, margin);
    return buf;
}

CertificateReport aggregate(const std::string& name, double worst_margin, int worst_run,
                            double worst_t, const char* what) {
    CertificateReport r;
    r.name = name;
    r.passed = worst_margin >= 0.0;
    r.worst_t = worst_t;
    r.worst_margin = worst_margin;
    r.detail = worst_detail(what, worst_margin, worst_run);
    return r;
}

// One random run and every per-run quantity the suites look at.
struct RunOutcome {
    double bound_margin = -std::numeric_limits<double>::infinity();
    double invariant_margin = -std::numeric_limits<double>::infinity();
    double monotone_margin = -std::numeric_limits<double>::infinity();
    double ratio_margin = 0.0;  // F3 below only
    bool has_ratio = false;
    double rate_ok = -1.0;  // >=0 pass
    double t_hat = 0.0;
    std::string error;
};

RunOutcome run_random_case(FieldKind kind, uint64_t seed, int index) {
    RunOutcome out;
    try {
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * uint64_t(index + 1)) ^ uint64_t(kind));
        const ProblemSpec p = sample_problem(kind, rng);
        const ControlSignal u = sample_bang_bang_control(p, rng);
        const IntegratorConfig cfg;
        const Trajectory traj = integrate_to_quench(p, u, cfg);

        const double bound = quench_time_bound(p);
        const double width = traj.quench->bracket_width();
        out.t_hat = traj.quench->t_hat;
        out.bound_margin = bound + width - out.t_hat;

        const auto inv = check_invariant_region(traj, RegionParams::defaults_for(p));
        out.invariant_margin = inv.passed ? std::max(0.0, inv.worst_margin) : inv.worst_margin;
        const auto mono = check_monotone_approach(traj);
        out.monotone_margin = mono.passed ? std::max(0.0, mono.worst_margin) : mono.worst_margin;
        if (kind == FieldKind::F3 && p.branch == Branch::Below) {
            const auto ratio = check_f3_ratio(traj);
            out.ratio_margin = ratio.passed ? std::max(0.0, ratio.worst_margin)
                                            : ratio.worst_margin;
            out.has_ratio = true;
        }
        const auto rate = check_rate_estimate(traj);
        out.rate_ok = rate.passed ? 1.0 : -1.0;
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<RunOutcome> run_field_suite(FieldKind kind, uint64_t seed) {
    std::vector<RunOutcome> outs(kRunsPerField);
    const bool par = parallel_enabled();
#pragma omp parallel for schedule(dynamic) if (par)
    for (int i = 0; i < kRunsPerField; ++i) outs[size_t(i)] = run_random_case(kind, seed, i);
    return outs;
}

CertificateReport failure_report(const std::string& name, const std::string& error) {
    CertificateReport r;
    r.name = name;
    r.passed = false;
    r.worst_margin = -std::numeric_limits<double>::infinity();
    r.detail = "run failed: " + error;
    return r;
}

const ProblemSpec& paper_example_problem() {
    static const ProblemSpec p = ProblemSpec::make(
        FieldKind::F2, {0.75, 0.0}, 1.0, MatrixSignal::constant({1.0, 0.0, 0.0, 0.0}));
    return p;
}


CertificateReport scalar_check(const std::string& name, double margin, const std::string& detail) {
    CertificateReport r;
    r.name = name;
    r.passed = margin >= 0.0;
    r.worst_margin = margin;
    r.detail = detail;
    return r;
}

std::string num_detail(const char* fmt, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

}  // namespace

ProblemSpec sample_problem(FieldKind kind, Rng& rng) {
    for (;;) {
        // Random drift scale: constant or two-piece B, moderate K0.
        const double rho0 = rng.uniform(0.5, 2.0);
        auto random_mat = [&] {
            return Mat2{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                        rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        };
        MatrixSignal B;
        if (rng.uniform() < 0.5) {
            B = MatrixSignal::constant(random_mat());
        } else {
            B = MatrixSignal{{0.0, rng.uniform(0.005, 0.05)}, {random_mat(), random_mat()}};
        }
        double k0;
        try {
            B.validate();
            k0 = compute_k0(B, rho0);
        } catch (const Error&) {
            continue;
        }
        if (k0 < 0.25 || k0 > 4.0) continue;

        const bool below = rng.uniform() < 0.5;
        const double th = rng.uniform(0.05, 0.95);
        Vec2 y0;
        switch (kind) {
            case FieldKind::F1: {
                const double half = 1.0 / (2.0 * k0);
                if (below)
                    y0 = {1.0 - half * th, k0 + 1.0 / k0 - 1.0 + rng.uniform(0.05, 2.0)};
                else
                    y0 = {1.0 + half * th, k0 + 1.0 + rng.uniform(0.05, 2.0)};
                break;
            }
            case FieldKind::F2: {
                const double r = below ? 1.0 - th / (2.0 * k0 + 1.0) : 1.0 + th / (2.0 * k0);
                const double phi = rng.uniform(0.0, 2.0 * M_PI);
                y0 = {r * std::cos(phi), r * std::sin(phi)};
                break;
            }
            case FieldKind::F3: {
                const double w = std::exp(-1.5) / (2.0 * k0);
                const double t2 = rng.uniform(0.05, 0.95);
                y0 = below ? Vec2{1.0 - w * th, 1.0 - w * t2}
                           : Vec2{1.0 + w * th, 1.0 + w * t2};
                break;
            }
        }
        try {
            return ProblemSpec::make(kind, y0, rho0, B);
        } catch (const Error&) {
            continue;  // boundary rounding; redraw
        }
    }
}

ControlSignal sample_bang_bang_control(const ProblemSpec& p, Rng& rng) {
    const int pieces = 1 + int(rng.below(4));
    const double step = quench_time_bound(p) / pieces;
    std::vector<Vec2> values(static_cast<size_t>(pieces));
    for (auto& v : values) {
        const double th = rng.uniform(0.0, 2.0 * M_PI);
        v = {p.rho0 * std::cos(th), p.rho0 * std::sin(th)};
    }
    return ControlSignal::piecewise(step, std::move(values));
}

std::vector<CertificateReport> verify_paper_example() {
    std::vector<CertificateReport> reports;
    const ProblemSpec& p = paper_example_problem();
    const IntegratorConfig cfg;

    const Trajectory with_control =
        integrate_to_quench(p, ControlSignal::constant({1.0, 0.0}), cfg);
    const double t1 = with_control.quench->t_hat;
    reports.push_back(scalar_check("paper_example_unit_control", 1e-6 - std::abs(t1 - 1.0 / 32.0),
                                   num_detail("t_hat=%.12g, expected %.12g", t1, 1.0 / 32.0)));

    const Trajectory no_control = integrate_to_quench(p, ControlSignal::zero(), cfg);
    const double expected0 = -0.25 - std::log(0.75);
    const double t0 = no_control.quench->t_hat;
    reports.push_back(scalar_check("paper_example_zero_control", 1e-6 - std::abs(t0 - expected0),
                                   num_detail("t_hat=%.12g, expected %.12g", t0, expected0)));

    // Radial-reduction oracle agreement on the same data.
    const auto radial = integrate_radial_f2(0.75, ScalarSignal::constant(1.0), cfg);
    reports.push_back(scalar_check(
        "paper_example_radial_oracle", 1e-8 - std::abs(radial.quench->t_hat - t1),
        num_detail("radial t_hat=%.12g vs planar %.12g", radial.quench->t_hat, t1)));
    return reports;
}

std::vector<CertificateReport> verify_bounds(uint64_t seed) {
    std::vector<CertificateReport> reports;
    for (FieldKind kind : kFields) {
        const auto outs = run_field_suite(kind, seed);
        double worst = std::numeric_limits<double>::infinity();
        int worst_run = -1;
        for (int i = 0; i < kRunsPerField; ++i) {
            if (!outs[size_t(i)].error.empty()) {
                reports.push_back(failure_report(std::string("bounds_") + to_string(kind),
                                                 outs[size_t(i)].error));
                worst_run = -2;
                break;
            }
            if (outs[size_t(i)].bound_margin < worst) {
                worst = outs[size_t(i)].bound_margin;
                worst_run = i;
            }
        }
        if (worst_run == -2) continue;
        reports.push_back(aggregate(std::string("bounds_") + to_string(kind), worst, worst_run,
                                    0.0, "t_hat <= bound + bracket width"));
    }
    return reports;
}

std::vector<CertificateReport> verify_invariants(uint64_t seed) {
    std::vector<CertificateReport> reports;
    for (FieldKind kind : kFields) {
        const auto outs = run_field_suite(kind, seed);
        double worst_inv = std::numeric_limits<double>::infinity();
        double worst_mono = std::numeric_limits<double>::infinity();
        double worst_ratio = std::numeric_limits<double>::infinity();
        bool any_ratio = false;
        int wi = -1, wm = -1, wr = -1;
        std::string error;
        for (int i = 0; i < kRunsPerField; ++i) {
            const auto& o = outs[size_t(i)];
            if (!o.error.empty()) {
                error = o.error;
                break;
            }
            if (o.invariant_margin < worst_inv) { worst_inv = o.invariant_margin; wi = i; }
            if (o.monotone_margin < worst_mono) { worst_mono = o.monotone_margin; wm = i; }
            if (o.has_ratio && o.ratio_margin < worst_ratio) {
                worst_ratio = o.ratio_margin;
                wr = i;
                any_ratio = true;
            }
        }
        const std::string tag = std::string("_") + to_string(kind);
        if (!error.empty()) {
            reports.push_back(failure_report("invariant_region" + tag, error));
            continue;
        }
        reports.push_back(aggregate("invariant_region" + tag, worst_inv, wi, 0.0,
                                    "region inequalities"));
        reports.push_back(aggregate("monotone_approach" + tag, worst_mono, wm, 0.0,
                                    "distance decrease"));
        if (kind == FieldKind::F3 && any_ratio)
            reports.push_back(aggregate("f3_ratio" + tag, worst_ratio, wr, 0.0, "ratio bounds"));
    }
    return reports;
}

std::vector<CertificateReport> verify_rates(uint64_t seed) {
    std::vector<CertificateReport> reports;
    for (FieldKind kind : kFields) {
        const auto outs = run_field_suite(kind, seed);
        double worst = 1.0;
        int worst_run = -1;
        std::string error;
        for (int i = 0; i < kRunsPerField; ++i) {
            if (!outs[size_t(i)].error.empty()) {
                error = outs[size_t(i)].error;
                break;
            }
            if (outs[size_t(i)].rate_ok < worst) {
                worst = outs[size_t(i)].rate_ok;
                worst_run = i;
            }
        }
        if (!error.empty()) {
            reports.push_back(failure_report(std::string("rate_estimate_") + to_string(kind), error));
            continue;
        }
        reports.push_back(aggregate(std::string("rate_estimate_") + to_string(kind), worst,
                                    worst_run, 0.0, "finite + stabilized"));
    }

    // Fitted approach exponent on the closed-form comparison runs.
    IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-14;
    cfg.delta_stop = 1e-7;
    struct Case {
        const char* name;
        ComparisonSolution comp;
    } cases[] = {{"chi_f1", ComparisonSolution::chi_f1(0.9)},
                 {"chi_f2", ComparisonSolution::chi_f2(0.75, 1.0)},
                 {"chi_f3", ComparisonSolution::chi_f3(1.0)}};
    for (const auto& c : cases) {
        const auto run = integrate_comparison_ode(c.comp, cfg);
        const double slope = fit_approach_exponent(run);
        reports.push_back(scalar_check(std::string("approach_exponent_") + c.name,
                                       0.05 - std::abs(slope - 0.5),
                                       num_detail("fitted %.4f vs %.1f", slope, 0.5)));
    }
    return reports;
}

std::vector<CertificateReport> verify_pmp(uint64_t seed) {
    std::vector<CertificateReport> reports;
    const IntegratorConfig cfg;

    // Variational solution against forward differences, and the duality
    // identity, over 20 random (problem, perturbation) pairs on F1/F2.
    double worst_fd = std::numeric_limits<double>::infinity();
    double worst_dual = std::numeric_limits<double>::infinity();
    double worst_decay = std::numeric_limits<double>::infinity();
    int wf = -1, wd = -1;
    Rng rng(seed + 1);
    // The difference quotient loses ~3 digits through the 1e-6 step, so the
    // oracle runs use much tighter tolerances than the path they check.
    IntegratorConfig fd_cfg;
    fd_cfg.rtol = 1e-12;
    fd_cfg.atol = 1e-15;
    for (int i = 0; i < 20; ++i) {
        const FieldKind kind = (i % 2 == 0) ? FieldKind::F1 : FieldKind::F2;
        const ProblemSpec p = sample_problem(kind, rng);
        const ControlSignal u = sample_bang_bang_control(p, rng);
        // Perturbation target on the same grid, so blends stay exact.
        std::vector<Vec2> alt_values(u.values.size());
        for (auto& v : alt_values) {
            const double th = rng.uniform(0.0, 2.0 * M_PI);
            v = {p.rho0 * std::cos(th), p.rho0 * std::sin(th)};
        }
        const ControlSignal u_alt = ControlSignal::piecewise(u.grid_step, alt_values);

        const Trajectory traj = integrate_to_quench(p, u, fd_cfg);
        const double t_hat = traj.quench->t_hat;
        const double horizon = 0.5 * t_hat;

        const SensitivityPath z = integrate_sensitivity(p, traj, u_alt, horizon, fd_cfg);

        // Forward difference of the flow in the perturbation direction.
        const double h = 1e-6;
        auto blend = [&](double w) {
            std::vector<Vec2> vals(u.values.size());
            for (size_t c = 0; c < vals.size(); ++c)
                vals[c] = u.values[c] + w * (alt_values[c] - u.values[c]);
            return ControlSignal::piecewise(u.grid_step, std::move(vals));
        };
        const Trajectory base = integrate_to_time(p, blend(0.0), fd_cfg, horizon);
        const Trajectory bumped = integrate_to_time(p, blend(h), fd_cfg, horizon);
        const Vec2 fd = (bumped.states.back() - base.states.back()) / h;
        const double rel = norm(fd - z.terminal()) / std::max(norm(fd), 1e-12);
        if (1e-4 - rel < worst_fd) {
            worst_fd = 1e-4 - rel;
            wf = i;
        }

        const double eps = std::min(default_epsilon(t_hat, fd_cfg.delta_stop), 0.25 * t_hat);
        const AdjointPath adj = integrate_adjoint(p, traj, eps, fd_cfg);
        const DualityCheck dc = adjoint_duality(p, traj, adj, u_alt, horizon, fd_cfg);
        const double gap = std::abs(dc.pairing - dc.integral);
        const double allowed = 1e-6 * (1.0 + std::abs(dc.pairing));
        if (allowed - gap < worst_dual) {
            worst_dual = allowed - gap;
            wd = i;
        }
        const double decay_margin = std::isfinite(adj.decay_constant) ? 1.0 : -1.0;
        worst_decay = std::min(worst_decay, decay_margin);
    }
    reports.push_back(aggregate("sensitivity_fd", worst_fd, wf, 0.0,
                                "relative error vs 1e-4 budget"));
    reports.push_back(aggregate("adjoint_duality", worst_dual, wd, 0.0,
                                "identity gap vs 1e-6 budget"));
    reports.push_back(scalar_check("adjoint_decay_bound", worst_decay,
                                   "||psi|| <= C1 * distance with finite recorded C1"));

    // Sweep and brute force on the worked example.
    const ProblemSpec& p = paper_example_problem();
    SearchConfig sc;
    sc.method = SearchMethod::Sweep;
    sc.n_intervals = 8;
    sc.max_iters = 60;
    const SearchResult sweep = sweep_search(p, sc, cfg);
    reports.push_back(scalar_check("sweep_best_t", 1e-5 - std::abs(sweep.best_t - 1.0 / 32.0),
                                   num_detail("best_t=%.10g vs %.10g", sweep.best_t, 1.0 / 32.0)));
    reports.push_back(scalar_check(
        "sweep_residual", sweep.certificate ? 1e-5 - sweep.certificate->max_residual : -1.0,
        sweep.certificate
            ? num_detail("max residual %.3e vs 1e-5, nontriviality %.3f",
                         sweep.certificate->max_residual, sweep.certificate->nontriviality_ratio)
            : "missing certificate"));
    reports.push_back(scalar_check(
        "sweep_nontriviality",
        sweep.certificate ? sweep.certificate->nontriviality_ratio - 0.1 : -1.0,
        "ratio must stay above 0.1"));

    SearchConfig bc;
    bc.method = SearchMethod::Brute;
    bc.n_intervals = 2;
    bc.n_directions = 8;
    const SearchResult brute = brute_force_search(p, bc, cfg);
    reports.push_back(scalar_check("brute_agreement", 1e-4 - std::abs(brute.best_t - sweep.best_t),
                                   num_detail("brute %.10g vs sweep %.10g", brute.best_t,
                                              sweep.best_t)));
    reports.push_back(scalar_check("control_helps",
                                   (sweep.zero_control_t - 1e-3) - sweep.best_t,
                                   num_detail("best %.10g vs zero %.10g", sweep.best_t,
                                              sweep.zero_control_t)));
    return reports;
}

std::vector<CertificateReport> verify_suite(const std::string& suite, uint64_t seed) {
    if (suite == "paper-example") return verify_paper_example();
    if (suite == "bounds") return verify_bounds(seed);
    if (suite == "invariants") return verify_invariants(seed);
    if (suite == "rates") return verify_rates(seed);
    if (suite == "pmp") return verify_pmp(seed);
    if (suite == "all") {
        std::vector<CertificateReport> all = verify_paper_example();
        for (auto&& r : verify_bounds(seed)) all.push_back(std::move(r));
        for (auto&& r : verify_invariants(seed)) all.push_back(std::move(r));
        for (auto&& r : verify_rates(seed)) all.push_back(std::move(r));
        for (auto&& r : verify_pmp(seed)) all.push_back(std::move(r));
        return all;
    }
    throw InvalidParameter("unknown suite: " + suite +
                           " (expected paper-example, bounds, invariants, rates, pmp, all)");
}

}  // namespace quench
