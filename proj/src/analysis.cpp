#include "quench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "quench/errors.hpp"

namespace quench {

namespace {

constexpr double kIneqTol = 1e-9;   // state-space inequality tolerance
constexpr double kMonoTol = 1e-12;  // strict-monotonicity tolerance

std::string format_margin(double t, double margin) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "worst margin %.3e at t=%.6g", margin, t);
    return buf;
}

struct MarginTracker {
    double worst_margin = std::numeric_limits<double>::infinity();
    double worst_t = 0.0;

    void update(double t, double margin) {
        if (margin < worst_margin) {
            worst_margin = margin;
            worst_t = t;
        }
    }
    CertificateReport report(std::string name, double tol) const {
        CertificateReport r;
        r.name = std::move(name);
        r.worst_t = worst_t;
        r.worst_margin = worst_margin;
        r.passed = worst_margin >= -tol;
        r.detail = format_margin(worst_t, worst_margin);
        return r;
    }
};

void require_in(double v, double lo, double hi, const char* what) {
    if (!(v > lo) || !(v < hi))
        throw ParamOutOfRange(std::string(what) + " outside its admissible open range");
}

void require_above(double v, double lo, const char* what) {
    if (!(v > lo))
        throw ParamOutOfRange(std::string(what) + " outside its admissible open range");
}

}  // namespace

RegionParams RegionParams::defaults_for(const ProblemSpec& p) {
    RegionParams r;
    switch (p.field) {
        case FieldKind::F1:
            if (p.branch == Branch::Below) {
                r.k1 = p.y0.x;
                r.k2 = p.y0.y;
            } else {
                r.k1t = p.y0.x;
                r.k2t = p.y0.y;
            }
            break;
        case FieldKind::F2:
            if (p.branch == Branch::Below)
                r.k3 = norm(p.y0);
            else
                r.k3t = norm(p.y0);
            break;
        case FieldKind::F3:
            if (p.branch == Branch::Below)
                r.k4 = std::min(p.y0.x, p.y0.y);
            else
                r.k4t = std::max(p.y0.x, p.y0.y);
            break;
    }
    return r;
}

CertificateReport check_invariant_region(const Trajectory& traj, const RegionParams& params) {
    const ProblemSpec& p = traj.problem;
    const RegionParams defaults = RegionParams::defaults_for(p);
    const double k0 = p.k0;
    MarginTracker tracker;

    auto margin_of = [&](Vec2 y) {
        switch (p.field) {
            case FieldKind::F1:
                if (p.branch == Branch::Below) {
                    const double K1 = params.k1.value_or(*defaults.k1);
                    const double K2 = params.k2.value_or(*defaults.k2);
                    require_in(K1, 1.0 - 1.0 / (2.0 * k0), 1.0 + 1e-300, "K1");
                    require_above(K2, k0 + 1.0 / k0 - 1.0 - 1e-12, "K2");
                    return std::min({y.x - K1, 1.0 - y.x, y.y - K2});
                } else {
                    const double K1t = params.k1t.value_or(*defaults.k1t);
                    const double K2t = params.k2t.value_or(*defaults.k2t);
                    require_in(K1t, 1.0 - 1e-300, 1.0 + 1.0 / (2.0 * k0), "K1~");
                    require_above(K2t, k0 + 1.0 - 1e-12, "K2~");
                    return std::min({K1t - y.x, y.x - 1.0, y.y - K2t});
                }
            case FieldKind::F2: {
                const double r = norm(y);
                if (p.branch == Branch::Below) {
                    const double K3 = params.k3.value_or(*defaults.k3);
                    require_in(K3, 1.0 - 1.0 / (2.0 * k0 + 1.0), 1.0 + 1e-300, "K3");
                    return std::min(r - K3, 1.0 - r);
                } else {
                    const double K3t = params.k3t.value_or(*defaults.k3t);
                    require_in(K3t, 1.0 - 1e-300, 1.0 + 1.0 / (2.0 * k0), "K3~");
                    return std::min(K3t - r, r - 1.0);
                }
            }
            case FieldKind::F3: {
                const double w = std::exp(-1.5) / (2.0 * k0);
                if (p.branch == Branch::Below) {
                    const double K4 = params.k4.value_or(*defaults.k4);
                    require_in(K4, 1.0 - w, 1.0 + 1e-300, "K4");
                    return std::min({y.x - K4, y.y - K4, 1.0 - y.x, 1.0 - y.y});
                } else {
                    const double K4t = params.k4t.value_or(*defaults.k4t);
                    require_in(K4t, 1.0 - 1e-300, 1.0 + w, "K4~");
                    return std::min({K4t - y.x, K4t - y.y, y.x - 1.0, y.y - 1.0});
                }
            }
        }
        throw InvalidParameter("unknown field kind");
    };

    for (size_t i = 0; i < traj.size(); ++i)
        tracker.update(traj.times[i], margin_of(traj.states[i]));
    return tracker.report("invariant_region", kIneqTol);
}

double quench_time_bound(const ProblemSpec& p) {
    switch (p.field) {
        case FieldKind::F1: {
            const double g = p.y0.x - 1.0;
            return g * g;
        }
        case FieldKind::F2: {
            const double g = norm(p.y0) - 1.0;
            return (2.0 * p.k0 + 1.0) * g * g / (2.0 * p.k0);
        }
        case FieldKind::F3:
            return 1.0 / (4.0 * p.k0 * p.k0);
    }
    throw InvalidParameter("unknown field kind");
}

CertificateReport check_rate_estimate(const Trajectory& traj) {
    if (!traj.quench)
        throw InvalidParameter("rate estimate needs a quenched trajectory");
    const double t_hat = traj.quench->t_hat;

    // Running maximum of (t_hat - t)^{2/3} / dist, then compare the overall
    // maximum against the maximum reached before the final decade of
    // approach.  The surrogate for the unknown constant C is stabilization.
    const double tau_min = t_hat - traj.times.back();
    double m_all = 0.0, m_before_last_decade = 0.0;
    double worst_t = 0.0;
    for (size_t i = 0; i < traj.size(); ++i) {
        const double tau = t_hat - traj.times[i];
        const double dist = singular_distance(traj.problem.field, traj.states[i]);
        const double g = std::pow(tau, 2.0 / 3.0) / dist;
        if (g > m_all) {
            m_all = g;
            worst_t = traj.times[i];
        }
        if (tau >= 10.0 * tau_min) m_before_last_decade = std::max(m_before_last_decade, g);
    }

    CertificateReport r;
    r.name = "rate_estimate";
    r.worst_t = worst_t;
    r.worst_margin = m_all;
    const bool finite = std::isfinite(m_all) && m_all > 0.0;
    const bool stable = m_before_last_decade > 0.0 && m_all <= 1.10 * m_before_last_decade;
    r.passed = finite && stable;
    char buf[160];
    std::snprintf(buf, sizeof buf, "M=%.6g, pre-decade M=%.6g, growth=%.3g%%", m_all,
                  m_before_last_decade,
                  m_before_last_decade > 0.0 ? 100.0 * (m_all / m_before_last_decade - 1.0)
                                             : std::numeric_limits<double>::infinity());
    r.detail = buf;
    return r;
}

CertificateReport check_f3_ratio(const Trajectory& traj) {
    const ProblemSpec& p = traj.problem;
    if (p.field != FieldKind::F3 || p.branch != Branch::Below)
        throw WrongField("ratio bounds apply to below-branch f3 trajectories");

    const double e32 = std::exp(1.5);
    const double c12 = (1.0 - p.y0.y) / (1.0 - p.y0.x) * e32;
    const double c21 = (1.0 - p.y0.x) / (1.0 - p.y0.y) * e32;

    MarginTracker tracker;
    for (size_t i = 0; i < traj.size(); ++i) {
        const Vec2 y = traj.states[i];
        const double ratio12 = (1.0 - y.y) / (1.0 - y.x);
        const double ratio21 = (1.0 - y.x) / (1.0 - y.y);
        tracker.update(traj.times[i], std::min(c12 - ratio12, c21 - ratio21));
    }
    return tracker.report("f3_ratio", kIneqTol);
}

CertificateReport check_monotone_approach(const Trajectory& traj) {
    const FieldKind kind = traj.problem.field;
    MarginTracker tracker;
    auto coord_dists = [&](Vec2 y) {
        return std::pair<double, double>{std::abs(1.0 - y.x), std::abs(1.0 - y.y)};
    };
    for (size_t i = 0; i + 1 < traj.size(); ++i) {
        double margin;
        if (kind == FieldKind::F3) {
            const auto [a1, a2] = coord_dists(traj.states[i]);
            const auto [b1, b2] = coord_dists(traj.states[i + 1]);
            margin = std::min(a1 - b1, a2 - b2);
        } else {
            margin = singular_distance(kind, traj.states[i]) -
                     singular_distance(kind, traj.states[i + 1]);
        }
        tracker.update(traj.times[i + 1], margin);
    }
    if (traj.size() < 2) tracker.update(0.0, -1.0);  // nothing to certify
    CertificateReport r = tracker.report("monotone_approach", kMonoTol);
    // Strict decrease: a flat pair is a violation, not a borderline pass.
    r.passed = r.worst_margin > kMonoTol;
    return r;
}

double fit_approach_exponent(std::span<const double> times, std::span<const double> dists,
                             double t_hat) {
    if (times.size() != dists.size() || times.size() < 4)
        throw InvalidParameter("exponent fit needs at least 4 samples");
    const double tau_min = t_hat - times.back();
    if (!(tau_min > 0.0)) throw InvalidParameter("t_hat must exceed the last sample time");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (size_t i = 0; i < times.size(); ++i) {
        const double tau = t_hat - times[i];
        if (tau > 10.0 * tau_min || !(dists[i] > 0.0)) continue;
        const double lx = std::log(tau);
        const double ly = std::log(dists[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 3) throw InvalidParameter("exponent fit needs at least 3 samples in the last decade");
    const double denom = double(n) * sxx - sx * sx;
    if (denom == 0.0) throw InvalidParameter("degenerate exponent fit");
    return (double(n) * sxy - sx * sy) / denom;
}

double fit_approach_exponent(const Trajectory& traj) {
    if (!traj.quench) throw InvalidParameter("exponent fit needs a quenched trajectory");
    std::vector<double> dists(traj.size());
    for (size_t i = 0; i < traj.size(); ++i)
        dists[i] = singular_distance(traj.problem.field, traj.states[i]);
    return fit_approach_exponent(traj.times, dists, traj.quench->t_hat);
}

double fit_approach_exponent(const ScalarTrajectory& traj) {
    if (!traj.quench) throw InvalidParameter("exponent fit needs a quenched trajectory");
    std::vector<double> dists(traj.values.size());
    for (size_t i = 0; i < traj.values.size(); ++i) dists[i] = std::abs(1.0 - traj.values[i]);
    return fit_approach_exponent(traj.times, dists, traj.quench->t_hat);
}

}  // namespace quench
