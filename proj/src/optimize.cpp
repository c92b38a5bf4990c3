#include "quench/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "quench/errors.hpp"
#include "quench/random.hpp"

namespace quench {

namespace {

bool parallel_enabled() {
    const char* v = std::getenv("QUENCH_NO_PARALLEL");
    return v == nullptr || v[0] == '\0' || std::string(v) == "0";
}

Vec2 project_ball(Vec2 v, double rho0) {
    const double n = norm(v);
    return n > rho0 ? (rho0 / n) * v : v;
}

struct Evaluation {
    double t_mid = 0.0;
    double width = 0.0;
    bool ok = false;
    std::string error;
};

Evaluation evaluate_control(const ProblemSpec& p, const ControlSignal& u,
                            const IntegratorConfig& icfg) {
    Evaluation e;
    try {
        const Trajectory traj = integrate_to_quench(p, u, icfg);
        e.t_mid = 0.5 * (traj.quench->bracket_lo + traj.quench->bracket_hi);
        e.width = traj.quench->bracket_width();
        e.ok = true;
    } catch (const Error& err) {
        e.error = err.what();
    }
    return e;
}

double zero_control_time(const ProblemSpec& p, const IntegratorConfig& icfg) {
    const Trajectory traj = integrate_to_quench(p, ControlSignal::zero(), icfg);
    return 0.5 * (traj.quench->bracket_lo + traj.quench->bracket_hi);
}

std::optional<PMPCertificate> certify(const ProblemSpec& p, const ControlSignal& u,
                                      const IntegratorConfig& icfg) {
    if (p.field == FieldKind::F3) return std::nullopt;
    const Trajectory traj = integrate_to_quench(p, u, icfg);
    const double eps = default_epsilon(traj.quench->t_hat, icfg.delta_stop);
    const AdjointPath adj = integrate_adjoint(p, traj, eps, icfg);
    return pmp_certificate(p, traj, u, adj);
}

}  // namespace

const char* to_string(SearchMethod m) {
    switch (m) {
        case SearchMethod::Brute: return "brute";
        case SearchMethod::Sweep: return "sweep";
        case SearchMethod::Direct: return "direct";
    }
    return "?";
}

SearchResult brute_force_search(const ProblemSpec& p, const SearchConfig& cfg,
                                const IntegratorConfig& icfg) {
    if (cfg.n_intervals < 1 || cfg.n_directions < 2)
        throw InvalidParameter("need n_intervals >= 1 and n_directions >= 2");
    const long choices = cfg.n_directions + (cfg.include_zero ? 1 : 0);
    double total_d = 1.0;
    for (int i = 0; i < cfg.n_intervals; ++i) total_d *= double(choices);
    if (total_d > 1e6) throw BudgetExceeded("brute-force candidate set exceeds 10^6");
    const long total = long(total_d);

    const double bound = quench_time_bound(p);
    const double grid_step = bound / cfg.n_intervals;

    std::vector<Vec2> palette;
    palette.reserve(size_t(choices));
    for (int j = 0; j < cfg.n_directions; ++j) {
        const double th = 2.0 * M_PI * double(j) / cfg.n_directions;
        palette.push_back({p.rho0 * std::cos(th), p.rho0 * std::sin(th)});
    }
    if (cfg.include_zero) palette.push_back({0.0, 0.0});

    auto candidate = [&](long index) {
        std::vector<Vec2> values(static_cast<size_t>(cfg.n_intervals));
        long rest = index;
        for (int k = 0; k < cfg.n_intervals; ++k) {
            values[size_t(k)] = palette[size_t(rest % choices)];
            rest /= choices;
        }
        return ControlSignal::piecewise(grid_step, std::move(values));
    };

    std::vector<Evaluation> evals(static_cast<size_t>(total));
    const bool par = parallel_enabled();
#pragma omp parallel for schedule(dynamic) if (par)
    for (long i = 0; i < total; ++i) evals[size_t(i)] = evaluate_control(p, candidate(i), icfg);

    // Index-ordered reduction: strict improvement wins, exact ties keep the
    // earlier candidate.
    long best = -1;
    for (long i = 0; i < total; ++i) {
        if (!evals[size_t(i)].ok) continue;
        if (best < 0 || evals[size_t(i)].t_mid < evals[size_t(best)].t_mid) best = i;
    }
    if (best < 0) {
        for (const auto& e : evals)
            if (!e.error.empty()) throw Error("all brute-force candidates failed: " + e.error);
        throw Error("brute-force search produced no candidates");
    }

    SearchResult res;
    res.best_control = candidate(best);
    res.best_t = evals[size_t(best)].t_mid;
    res.bound = bound;
    res.zero_control_t = zero_control_time(p, icfg);
    res.evaluations = total;
    res.converged = true;
    res.certificate = certify(p, res.best_control, icfg);
    return res;
}

SearchResult sweep_search(const ProblemSpec& p, const SearchConfig& cfg,
                          const IntegratorConfig& icfg,
                          const std::optional<ControlSignal>& initial) {
    if (p.field == FieldKind::F3)
        throw UnsupportedField("sweep unsupported for f3: no adjoint terminal condition");
    if (cfg.n_intervals < 1) throw InvalidParameter("need n_intervals >= 1");
    if (!(cfg.sweep_damping > 0.0) || cfg.sweep_damping > 1.0)
        throw InvalidParameter("sweep damping must lie in (0, 1]");

    const double bound = quench_time_bound(p);
    const double grid_step = bound / cfg.n_intervals;
    const size_t n = size_t(cfg.n_intervals);

    std::vector<Vec2> u_values(n, Vec2{0.0, 0.0});
    if (initial) {
        for (size_t j = 0; j < n; ++j)
            u_values[j] = project_ball(eval_control(*initial, (double(j) + 0.5) * grid_step),
                                       p.rho0);
    }

    SearchResult res;
    res.bound = bound;
    res.zero_control_t = zero_control_time(p, icfg);

    std::vector<Vec2> best_values = u_values;
    double best_t = std::numeric_limits<double>::infinity();
    double prev_t = std::numeric_limits<double>::infinity();
    int rises = 0;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const ControlSignal u = ControlSignal::piecewise(grid_step, u_values);
        const Trajectory traj = integrate_to_quench(p, u, icfg);
        const double t_mid = 0.5 * (traj.quench->bracket_lo + traj.quench->bracket_hi);
        ++res.evaluations;

        if (t_mid < best_t) {
            best_t = t_mid;
            best_values = u_values;
        }
        if (iter > 0 && t_mid > prev_t) {
            if (++rises >= 5) {
                res.no_descent = true;
                res.history.push_back({iter, t_mid, 0.0});
                break;
            }
        } else {
            rises = 0;
        }
        prev_t = t_mid;

        const double eps = default_epsilon(traj.quench->t_hat, icfg.delta_stop);
        const AdjointPath adj = integrate_adjoint(p, traj, eps, icfg);

        size_t moved = 0;
        for (size_t j = 0; j < n; ++j) {
            const double mid = (double(j) + 0.5) * grid_step;
            if (mid > adj.t_terminal()) continue;  // beyond the adjoint window
            const Vec2 hat = pmp_argmax(adj.psi_at(mid), p.B.value(mid), p.rho0);
            const Vec2 next = project_ball((1.0 - cfg.sweep_damping) * u_values[j] +
                                               cfg.sweep_damping * hat,
                                           p.rho0);
            if (norm(next - u_values[j]) > 1e-6) ++moved;
            u_values[j] = next;
        }
        const double step_measure = double(moved) / double(n);
        res.history.push_back({iter, t_mid, step_measure});
        if (step_measure <= cfg.conv_tol) {
            res.converged = true;
            break;
        }
    }

    res.best_control = ControlSignal::piecewise(grid_step, best_values);
    res.best_t = best_t;
    res.certificate = certify(p, res.best_control, icfg);
    return res;
}

namespace {

// Nelder-Mead on the stacked per-interval control values, with projection
// onto the rho0 ball after every move.
struct Simplex {
    std::vector<std::vector<double>> x;
    std::vector<double> f;
};

std::vector<double> project_params(std::vector<double> x, double rho0) {
    for (size_t j = 0; j + 1 < x.size(); j += 2) {
        const Vec2 v = project_ball({x[j], x[j + 1]}, rho0);
        x[j] = v.x;
        x[j + 1] = v.y;
    }
    return x;
}

}  // namespace

SearchResult direct_search(const ProblemSpec& p, const SearchConfig& cfg,
                           const IntegratorConfig& icfg) {
    if (cfg.n_intervals < 1) throw InvalidParameter("need n_intervals >= 1");
    const size_t dim = 2 * size_t(cfg.n_intervals);
    if (dim > 12) throw BudgetExceeded("direct search limited to 12 parameters");

    const double bound = quench_time_bound(p);
    const double grid_step = bound / cfg.n_intervals;

    long evaluations = 0;
    auto control_of = [&](const std::vector<double>& x) {
        std::vector<Vec2> values(static_cast<size_t>(cfg.n_intervals));
        for (size_t j = 0; j < values.size(); ++j) values[j] = {x[2 * j], x[2 * j + 1]};
        return ControlSignal::piecewise(grid_step, std::move(values));
    };
    auto objective = [&](const std::vector<double>& x) {
        ++evaluations;
        const Evaluation e = evaluate_control(p, control_of(x), icfg);
        return e.ok ? e.t_mid : std::numeric_limits<double>::infinity();
    };

    // Start points: zero control (when admitted) plus seeded bang-bang draws.
    Rng rng(cfg.seed);
    std::vector<std::vector<double>> starts;
    if (cfg.include_zero) starts.emplace_back(dim, 0.0);
    const int random_starts = 3;
    for (int s = 0; s < random_starts; ++s) {
        std::vector<double> x(dim);
        for (size_t j = 0; j < dim; j += 2) {
            const double th = rng.uniform(0.0, 2.0 * M_PI);
            x[j] = p.rho0 * std::cos(th);
            x[j + 1] = p.rho0 * std::sin(th);
        }
        starts.push_back(std::move(x));
    }

    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();

    for (const auto& start : starts) {
        Simplex s;
        s.x.push_back(project_params(start, p.rho0));
        const double h = 0.25 * p.rho0;
        for (size_t j = 0; j < dim; ++j) {
            auto v = start;
            v[j] += h;
            s.x.push_back(project_params(std::move(v), p.rho0));
        }
        s.f.resize(s.x.size());
        for (size_t i = 0; i < s.x.size(); ++i) s.f[i] = objective(s.x[i]);

        for (int iter = 0; iter < cfg.max_iters; ++iter) {
            // Order vertices; stable on ties for determinism.
            std::vector<size_t> order(s.x.size());
            std::iota(order.begin(), order.end(), size_t(0));
            std::stable_sort(order.begin(), order.end(),
                             [&](size_t a, size_t b) { return s.f[a] < s.f[b]; });
            const size_t lo = order.front(), hi = order.back(), second_hi = order[dim - 1];

            if (std::abs(s.f[hi] - s.f[lo]) <= 1e-9 * (1.0 + std::abs(s.f[lo]))) break;

            std::vector<double> centroid(dim, 0.0);
            for (size_t i : order)
                if (i != hi)
                    for (size_t j = 0; j < dim; ++j) centroid[j] += s.x[i][j] / double(dim);

            auto blend = [&](double c) {
                std::vector<double> v(dim);
                for (size_t j = 0; j < dim; ++j)
                    v[j] = centroid[j] + c * (centroid[j] - s.x[hi][j]);
                return project_params(std::move(v), p.rho0);
            };

            const auto xr = blend(1.0);
            const double fr = objective(xr);
            if (fr < s.f[lo]) {
                const auto xe = blend(2.0);
                const double fe = objective(xe);
                if (fe < fr) {
                    s.x[hi] = xe;
                    s.f[hi] = fe;
                } else {
                    s.x[hi] = xr;
                    s.f[hi] = fr;
                }
            } else if (fr < s.f[second_hi]) {
                s.x[hi] = xr;
                s.f[hi] = fr;
            } else {
                const auto xc = blend(-0.5);
                const double fc = objective(xc);
                if (fc < s.f[hi]) {
                    s.x[hi] = xc;
                    s.f[hi] = fc;
                } else {
                    for (size_t i : order) {
                        if (i == lo) continue;
                        for (size_t j = 0; j < dim; ++j)
                            s.x[i][j] = 0.5 * (s.x[i][j] + s.x[lo][j]);
                        s.x[i] = project_params(std::move(s.x[i]), p.rho0);
                        s.f[i] = objective(s.x[i]);
                    }
                }
            }
            if (evaluations > 1'000'000) throw BudgetExceeded("direct search evaluation budget");
        }

        const size_t lo = size_t(std::min_element(s.f.begin(), s.f.end()) - s.f.begin());
        if (s.f[lo] < best_f) {
            best_f = s.f[lo];
            best_x = s.x[lo];
        }
    }

    if (!std::isfinite(best_f)) throw Error("direct search found no quenching candidate");

    SearchResult res;
    res.best_control = control_of(best_x);
    res.best_t = best_f;
    res.bound = bound;
    res.zero_control_t = zero_control_time(p, icfg);
    res.evaluations = evaluations;
    res.converged = true;
    res.certificate = certify(p, res.best_control, icfg);
    return res;
}

CertificateReport perturbation_smoke_test(const ProblemSpec& p, const ControlSignal& u,
                                          double window, int n, uint64_t seed,
                                          const IntegratorConfig& icfg) {
    if (window < 0.0) throw InvalidParameter("window must be nonnegative");
    const Trajectory base = integrate_to_quench(p, u, icfg);
    if (window >= base.quench->t_hat)
        throw InvalidParameter("window must precede the quench time");

    CertificateReport report;
    report.name = "perturbation_smoke";
    report.worst_t = window;
    if (window == 0.0 || n <= 0) {
        report.passed = true;
        report.worst_margin = 0.0;
        report.detail = "vacuous window";
        return report;
    }

    // Perturbations patch one cell of length window/10 with a random ball
    // value; everywhere else the control is reproduced exactly, so the
    // Ekeland distance to u is at most window/10.
    Rng rng(seed);
    const double patch = window / 10.0;
    int ok = 0;
    for (int i = 0; i < n; ++i) {
        // The patch grid must refine the base grid, or the resampled copy
        // would disagree with u away from the patch.
        double step = patch;
        if (u.kind == ControlSignal::Kind::Piecewise) {
            step = u.grid_step <= patch ? u.grid_step
                                        : u.grid_step / std::ceil(u.grid_step / patch);
        }
        const size_t cells = size_t(std::ceil(window / step)) + 1;
        std::vector<Vec2> values(cells);
        for (size_t c = 0; c < cells; ++c) values[c] = eval_control(u, (double(c) + 0.5) * step);
        const size_t target = size_t(rng.below(cells));
        const double th = rng.uniform(0.0, 2.0 * M_PI);
        const double rad = p.rho0 * rng.uniform();
        values[target] = {rad * std::cos(th), rad * std::sin(th)};

        const ControlSignal pert = ControlSignal::piecewise(step, std::move(values));
        try {
            const Trajectory t = integrate_to_time(p, pert, icfg, window);
            if (!t.quench) ++ok;
        } catch (const Error&) {
            // quench or failure inside the window counts as a miss
        }
    }

    report.passed = ok == n;
    report.worst_margin = double(ok - n);
    report.detail = std::to_string(ok) + "/" + std::to_string(n) + " perturbed runs stayed quench-free";
    return report;
}

}  // namespace quench
