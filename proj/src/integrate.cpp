#include "quench/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>

#include "quench/analysis.hpp"
#include "quench/errors.hpp"
#include "rk45.hpp"

namespace quench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double next_piecewise_break(double t, double grid_step) {
    const double k = std::floor(t / grid_step) + 1.0;
    return k * grid_step;
}

double next_signal_break(double t, const ControlSignal& u, const MatrixSignal& B) {
    double brk = kInf;
    if (u.kind == ControlSignal::Kind::Piecewise)
        brk = std::min(brk, next_piecewise_break(t, u.grid_step));
    auto it = std::upper_bound(B.breakpoints.begin(), B.breakpoints.end(), t);
    if (it != B.breakpoints.end()) brk = std::min(brk, *it);
    // Skip breaks that are indistinguishable from t.
    if (brk - t <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t)))
        return next_signal_break(brk, u, B);
    return brk;
}

// Square-root model estimate shared by the planar and scalar integrators.
// rem is the model remainder (distance^2 or the F3 product), slope its exact
// decrease rate at the terminal sample, and allowance the slope uncertainty
// from the drift bound plus the tail variation of the slope itself.
QuenchEstimate square_root_estimate(double t_end, double rem, double slope, double allowance,
                                    Vec2 terminal_state, double terminal_level) {
    if (!(slope > 0.0)) throw ModelMismatch("tail slope has the wrong sign for the branch");
    const double safety = 16.0;
    const double a = safety * allowance;
    const double slope_hi = slope + a;
    const double slope_lo = std::max(slope - a, 0.25 * slope);
    const double floor = 1024.0 * std::numeric_limits<double>::epsilon() * (1.0 + t_end);

    QuenchEstimate est;
    est.t_hat = t_end + rem / slope;
    est.bracket_lo = std::max(t_end, t_end + rem / slope_hi - floor);
    est.bracket_hi = t_end + rem / slope_lo + floor;
    est.terminal_state = terminal_state;
    est.terminal_y2_or_radius = terminal_level;
    return est;
}

void check_admissible(const ProblemSpec& p, const ControlSignal& u) {
    if (u.kind == ControlSignal::Kind::Feedback) return;  // bounded by construction
    if (u.sup_norm() > p.rho0 * (1.0 + 1e-9))
        throw InvalidParameter("control exceeds the bound rho0");
}

double resolve_t_cap(const ProblemSpec& p, const IntegratorConfig& cfg) {
    return cfg.t_cap > 0.0 ? cfg.t_cap : 2.0 * quench_time_bound(p);
}

Trajectory run_planar(const ProblemSpec& p, const ControlSignal& u, const IntegratorConfig& cfg,
                      double t_stop, bool require_quench) {
    cfg.validate();
    check_admissible(p, u);
    if (singular_distance(p.field, p.y0) <= cfg.delta_stop)
        throw InvalidParameter("initial state already within the stop radius");

    Trajectory traj;
    traj.problem = p;
    traj.control = u;

    auto node_deriv_out = [&](double t, Vec2 y) {
        return eval_field(p.field, y) + apply_B(p.B, t, eval_control(u, t));
    };

    traj.times.push_back(0.0);
    traj.states.push_back(p.y0);
    const Vec2 d0 = node_deriv_out(0.0, p.y0);
    traj.deriv_in.push_back(d0);
    traj.deriv_out.push_back(d0);

    bool quenched = false;
    const bool freeze_control = u.kind != ControlSignal::Kind::Feedback;

    auto make_rhs = [&](double t_begin) {
        const Mat2 B_step = p.B.value(t_begin);
        const Vec2 u_step = eval_control(u, t_begin);
        return [&, B_step, u_step, t_begin](double t, Vec2 y) {
            const Vec2 uv = freeze_control ? u_step : eval_control(u, t);
            (void)t_begin;
            return eval_field(p.field, y) + B_step * uv;
        };
    };
    auto step_cap = [&](double, Vec2 y, Vec2 k1) {
        return 0.25 * singular_distance(p.field, y) / (norm(k1) + 1e-300);
    };
    auto next_break = [&](double t) { return next_signal_break(t, u, p.B); };
    auto on_accept = [&](double t, Vec2 y, Vec2 d_in) {
        if (!on_branch(p.field, p.branch, y))
            throw LeftSeedRegion("sampled state crossed the singular set");
        traj.times.push_back(t);
        traj.states.push_back(y);
        traj.deriv_in.push_back(d_in);
        traj.deriv_out.push_back(node_deriv_out(t, y));
        if (singular_distance(p.field, y) <= cfg.delta_stop) {
            quenched = true;
            return false;
        }
        return true;
    };

    detail::adaptive_drive<Vec2>(0.0, p.y0, t_stop, cfg.rtol, cfg.atol, cfg.max_step, make_rhs,
                                 step_cap, next_break, on_accept);

    if (quenched) {
        traj.quench = estimate_quench_time(p.field, p.k0, traj.times, traj.states);
    } else if (require_quench) {
        throw HorizonExceeded("time cap reached before quench; admissible runs always quench");
    }
    return traj;
}

}  // namespace

void IntegratorConfig::validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0) || !(delta_stop > 0.0) || !(max_step > 0.0))
        throw InvalidParameter("integrator tolerances and steps must be positive");
    if (!(delta_stop > 100.0 * atol))
        throw InvalidParameter("delta_stop must exceed 100*atol");
    if (t_cap < 0.0) throw InvalidParameter("t_cap must be nonnegative");
}

Vec2 Trajectory::state_at(double t) const {
    const double tol = 1e-12 * (1.0 + std::abs(t));
    if (t < times.front() - tol || t > times.back() + tol)
        throw InvalidParameter("interpolation time outside the sampled window");
    t = std::clamp(t, times.front(), times.back());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    size_t i = it == times.begin() ? 0 : size_t(it - times.begin()) - 1;
    if (i + 1 >= times.size()) i = times.size() - 2;
    const double dt = times[i + 1] - times[i];
    const double s = (t - times[i]) / dt;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * states[i] + (s3 - 2 * s2 + s) * dt * deriv_out[i] +
           (-2 * s3 + 3 * s2) * states[i + 1] + (s3 - s2) * dt * deriv_in[i + 1];
}

Vec2 Trajectory::deriv_at(double t) const {
    const double tol = 1e-12 * (1.0 + std::abs(t));
    if (t < times.front() - tol || t > times.back() + tol)
        throw InvalidParameter("interpolation time outside the sampled window");
    t = std::clamp(t, times.front(), times.back());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    size_t i = it == times.begin() ? 0 : size_t(it - times.begin()) - 1;
    if (i + 1 >= times.size()) i = times.size() - 2;
    const double dt = times[i + 1] - times[i];
    const double s = (t - times[i]) / dt;
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) / dt) * states[i] + (3 * s2 - 4 * s + 1) * deriv_out[i] +
           ((-6 * s2 + 6 * s) / dt) * states[i + 1] + (3 * s2 - 2 * s) * deriv_in[i + 1];
}

Trajectory integrate_to_quench(const ProblemSpec& p, const ControlSignal& u,
                               const IntegratorConfig& cfg) {
    return run_planar(p, u, cfg, resolve_t_cap(p, cfg), /*require_quench=*/true);
}

Trajectory integrate_to_time(const ProblemSpec& p, const ControlSignal& u,
                             const IntegratorConfig& cfg, double t_stop) {
    if (!(t_stop > 0.0)) throw InvalidParameter("t_stop must be positive");
    return run_planar(p, u, cfg, t_stop, /*require_quench=*/false);
}

QuenchEstimate estimate_quench_time(FieldKind kind, double k0, std::span<const double> times,
                                    std::span<const Vec2> states) {
    if (times.size() != states.size() || times.size() < 3)
        throw InvalidParameter("quench estimation needs at least 3 tail samples");
    if (!(k0 > 0.0)) throw InvalidParameter("k0 must be positive");
    const size_t n = times.size();
    const Vec2 ye = states[n - 1];
    const double t_end = times[n - 1];
    if (singular_distance(kind, states[n - 1]) >= singular_distance(kind, states[n - 2]))
        throw ModelMismatch("tail distance is not shrinking");

    switch (kind) {
        case FieldKind::F1: {
            const double d = std::abs(1.0 - ye.x);
            const double slope = 2.0 * ye.y;
            const double rem = d * d;
            if (!(slope > 0.0))
                throw ModelMismatch("tail slope has the wrong sign for the branch");
            const double variation =
                2.0 * (std::abs(ye.x) + std::abs(ye.y) + k0) * (rem / slope);
            return square_root_estimate(t_end, rem, slope, 2.0 * k0 * d + variation, ye, ye.y);
        }
        case FieldKind::F2: {
            const double r = norm(ye);
            const double d = std::abs(1.0 - r);
            return square_root_estimate(t_end, d * d, 2.0 * r, 2.0 * k0 * d + 2.0 * d, ye, r);
        }
        case FieldKind::F3: {
            const double d1 = std::abs(1.0 - ye.x);
            const double d2 = std::abs(1.0 - ye.y);
            return square_root_estimate(t_end, d1 * d2, 2.0, k0 * (d1 + d2), ye, ye.y);
        }
    }
    throw InvalidParameter("unknown field kind");
}

ComparisonSolution ComparisonSolution::chi_f1(double y1_0) {
    if (y1_0 == 1.0) throw InvalidParameter("chi_f1 start must be off the singular set");
    return {Kind::ChiF1, y1_0, 0.0};
}

ComparisonSolution ComparisonSolution::chi_f2(double y0_norm, double k0) {
    if (!(k0 > 0.0)) throw InvalidParameter("k0 must be positive");
    if (!(y0_norm > 0.0) || !(y0_norm < 1.0))
        throw InvalidParameter("chi_f2 is the below-branch comparison; need ||y0|| in (0,1)");
    return {Kind::ChiF2, y0_norm, k0};
}

ComparisonSolution ComparisonSolution::chi_f3(double k0) {
    if (!(k0 > 0.0)) throw InvalidParameter("k0 must be positive");
    return {Kind::ChiF3, 1.0 - 1.0 / (2.0 * k0), k0};
}

double ComparisonSolution::quench_time() const {
    const double g = (start - 1.0) * (start - 1.0);
    switch (kind) {
        case Kind::ChiF1: return g;
        case Kind::ChiF2: return (2.0 * k0 + 1.0) * g / (2.0 * k0);
        case Kind::ChiF3: return 1.0 / (4.0 * k0 * k0);
    }
    return 0.0;
}

double ComparisonSolution::slope_numerator() const {
    if (kind == Kind::ChiF2) return 0.5 * (1.0 - 1.0 / (2.0 * k0 + 1.0));
    return 0.5;
}

double ComparisonSolution::value(double t) const {
    if (t < 0.0) throw InvalidParameter("comparison solutions start at t = 0");
    const double T = quench_time();
    if (t > T) throw OutOfWindow("past the closed-form quench time");
    const double g = (start - 1.0) * (start - 1.0);
    switch (kind) {
        case Kind::ChiF1: {
            const double s = std::sqrt(std::max(0.0, g - t));
            return start < 1.0 ? 1.0 - s : 1.0 + s;
        }
        case Kind::ChiF2:
            return 1.0 - std::sqrt(std::max(0.0, g - 2.0 * slope_numerator() * t));
        case Kind::ChiF3:
            return 1.0 - std::sqrt(std::max(0.0, T - t));
    }
    return 0.0;
}

ScalarSignal ScalarSignal::zero() { return {}; }

ScalarSignal ScalarSignal::constant(double v) {
    ScalarSignal s;
    s.kind = Kind::Constant;
    s.constant_value = v;
    return s;
}

ScalarSignal ScalarSignal::piecewise(double grid_step, std::vector<double> values) {
    if (!(grid_step > 0.0) || values.empty())
        throw InvalidParameter("piecewise scalar signal needs grid_step > 0 and values");
    ScalarSignal s;
    s.kind = Kind::Piecewise;
    s.grid_step = grid_step;
    s.values = std::move(values);
    return s;
}

double ScalarSignal::value(double t) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return constant_value;
        case Kind::Piecewise: {
            const double idx = std::floor(t / grid_step);
            if (idx < 0.0) return values.front();
            if (idx >= double(values.size())) return values.back();
            return values[size_t(idx)];
        }
    }
    return 0.0;
}

double ScalarSignal::sup_norm() const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return std::abs(constant_value);
        case Kind::Piecewise: {
            double m = 0.0;
            for (double v : values) m = std::max(m, std::abs(v));
            return m;
        }
    }
    return 0.0;
}

namespace {

// Shared scalar quench loop for the radial reduction and the comparison ODEs.
ScalarTrajectory drive_scalar(double x0, double t_cap, const IntegratorConfig& cfg,
                              const std::function<double(double)>& drift_value,
                              const std::function<double(double)>& next_break,
                              const std::function<double(double)>& autonomous_part,
                              const std::function<QuenchEstimate(double, double)>& estimator,
                              bool require_quench) {
    cfg.validate();
    if (std::abs(1.0 - x0) <= cfg.delta_stop)
        throw InvalidParameter("initial value already within the stop radius");

    ScalarTrajectory traj;
    traj.times.push_back(0.0);
    traj.values.push_back(x0);
    bool quenched = false;

    auto make_rhs = [&](double t_begin) {
        const double d = drift_value(t_begin);
        return [&, d](double, double x) { return autonomous_part(x) + d; };
    };
    auto step_cap = [&](double, double x, double k1) {
        return 0.25 * std::abs(1.0 - x) / (std::abs(k1) + 1e-300);
    };
    auto on_accept = [&](double t, double x, double) {
        const bool below = x0 < 1.0;
        if (below ? x >= 1.0 : x <= 1.0)
            throw LeftSeedRegion("scalar run crossed the singular point");
        traj.times.push_back(t);
        traj.values.push_back(x);
        if (std::abs(1.0 - x) <= cfg.delta_stop) {
            quenched = true;
            return false;
        }
        return true;
    };

    detail::adaptive_drive<double>(0.0, x0, t_cap, cfg.rtol, cfg.atol, cfg.max_step, make_rhs,
                                   step_cap, next_break, on_accept);

    if (quenched) {
        if (traj.times.size() < 3)
            throw InvalidParameter("quench estimation needs at least 3 tail samples");
        const size_t n = traj.times.size();
        if (std::abs(1.0 - traj.values[n - 1]) >= std::abs(1.0 - traj.values[n - 2]))
            throw ModelMismatch("tail distance is not shrinking");
        traj.quench = estimator(traj.times.back(), traj.values.back());
    } else if (require_quench) {
        throw HorizonExceeded("time cap reached before quench");
    }
    return traj;
}

}  // namespace

ScalarTrajectory integrate_radial_f2(double r0, const ScalarSignal& drift,
                                     const IntegratorConfig& cfg) {
    if (!(r0 > 0.0) || r0 == 1.0)
        throw InvalidParameter("radial start must be in (0,1) or (1,inf)");
    const double K = drift.sup_norm();
    double t_cap = cfg.t_cap;
    if (t_cap == 0.0) {
        const double g = (r0 - 1.0) * (r0 - 1.0);
        if (K > 0.0)
            t_cap = 2.0 * (2.0 * K + 1.0) * g / (2.0 * K);
        else
            t_cap = r0 < 1.0 ? g / r0 : g;
    }

    auto drift_value = [&](double t) { return drift.value(t); };
    auto next_break = [&](double t) {
        if (drift.kind != ScalarSignal::Kind::Piecewise) return kInf;
        const double brk = next_piecewise_break(t, drift.grid_step);
        if (brk - t <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t)))
            return next_piecewise_break(brk, drift.grid_step);
        return brk;
    };
    auto autonomous = [](double x) { return x / (1.0 - x); };
    auto estimator = [&](double t_end, double x_end) {
        const double d = std::abs(1.0 - x_end);
        return square_root_estimate(t_end, d * d, 2.0 * x_end, 2.0 * K * d + 2.0 * d,
                                    {x_end, 0.0}, x_end);
    };
    return drive_scalar(r0, t_cap, cfg, drift_value, next_break, autonomous, estimator,
                        /*require_quench=*/true);
}

ScalarTrajectory integrate_comparison_ode(const ComparisonSolution& comp,
                                          const IntegratorConfig& cfg) {
    const double m = comp.slope_numerator();
    double t_cap = cfg.t_cap > 0.0 ? cfg.t_cap : 2.0 * comp.quench_time();
    auto drift_value = [](double) { return 0.0; };
    auto next_break = [](double) { return kInf; };
    auto autonomous = [m](double x) { return m / (1.0 - x); };
    auto estimator = [&](double t_end, double x_end) {
        const double d = std::abs(1.0 - x_end);
        return square_root_estimate(t_end, d * d, 2.0 * m, 0.0, {x_end, 0.0}, x_end);
    };
    return drive_scalar(comp.start, t_cap, cfg, drift_value, next_break, autonomous, estimator,
                        /*require_quench=*/true);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    char buf[512];
    os << "t,y1,y2,f1,f2,dist\n";
    for (size_t i = 0; i < traj.size(); ++i) {
        const Vec2 y = traj.states[i];
        const Vec2 f = eval_field(traj.problem.field, y);
        const double d = singular_distance(traj.problem.field, y);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", traj.times[i],
                      y.x, y.y, f.x, f.y, d);
        os << buf;
    }
    if (traj.quench) {
        std::snprintf(buf, sizeof buf, "# t_hat=%.17g bracket=%.17g,%.17g\n", traj.quench->t_hat,
                      traj.quench->bracket_lo, traj.quench->bracket_hi);
        os << buf;
    }
}

}  // namespace quench
