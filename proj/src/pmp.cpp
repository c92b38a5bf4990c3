#include "quench/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quench/errors.hpp"
#include "rk45.hpp"

namespace quench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pmp_field(FieldKind kind) {
    if (kind == FieldKind::F3)
        throw UnsupportedField("no adjoint terminal condition exists for f3");
}

Vec2 terminal_condition(FieldKind kind, Vec2 yT) {
    if (kind == FieldKind::F1) return {1.0 - yT.x, 0.0};
    const double r = norm(yT);
    return ((1.0 - r) / r) * yT;
}

double require_quench_time(const Trajectory& traj) {
    if (!traj.quench) throw InvalidParameter("trajectory has no quench estimate");
    return traj.quench->t_hat;
}

// First trajectory node strictly after t (the interpolant is only C^1 there,
// so integration steps should not cross nodes).
double next_node_after(const std::vector<double>& times, double t) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    while (it != times.end() &&
           *it - t <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t)))
        ++it;
    return it == times.end() ? kInf : *it;
}

double next_control_break(const ControlSignal& u, double t) {
    if (u.kind != ControlSignal::Kind::Piecewise) return kInf;
    const double brk = (std::floor(t / u.grid_step) + 1.0) * u.grid_step;
    if (brk - t <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t)))
        return brk + u.grid_step;
    return brk;
}

double next_matrix_break(const MatrixSignal& B, double t) {
    auto it = std::upper_bound(B.breakpoints.begin(), B.breakpoints.end(), t);
    return it == B.breakpoints.end() ? kInf : *it;
}

// State of the joint variational/pairing integration.
struct ZQ {
    Vec2 z{};
    double q = 0.0;

    friend ZQ operator+(ZQ a, ZQ b) { return {a.z + b.z, a.q + b.q}; }
    friend ZQ operator-(ZQ a, ZQ b) { return {a.z - b.z, a.q - b.q}; }
    friend ZQ operator*(double s, ZQ a) { return {s * a.z, s * a.q}; }
    friend ZQ operator*(ZQ a, double s) { return {s * a.z, s * a.q}; }
};

double err_norm(ZQ e, ZQ y0, ZQ y1, double atol, double rtol) {
    const double ez = detail::err_norm(e.z, y0.z, y1.z, atol, rtol);
    const double eq = detail::err_norm(e.q, y0.q, y1.q, atol, rtol);
    return std::sqrt((2.0 * ez * ez + eq * eq) / 3.0);
}

}  // namespace

double default_epsilon(double t_hat, double delta_stop) {
    const double eps = std::max(1e-3 * t_hat, 10.0 * std::pow(delta_stop, 2.0 / 3.0));
    // Fast-quenching problems can undercut the resolution-based term; the
    // regularization must stay inside (0, t_hat) regardless.
    return std::min(eps, 0.25 * t_hat);
}

Vec2 AdjointPath::psi_at(double t) const {
    // times run from t_terminal down to 0
    const double tol = 1e-12 * (1.0 + std::abs(t));
    if (t > times.front() + tol || t < times.back() - tol)
        throw InvalidParameter("adjoint interpolation time outside the window");
    t = std::clamp(t, times.back(), times.front());
    auto it = std::upper_bound(times.begin(), times.end(), t, std::greater<double>());
    size_t i = it == times.begin() ? 0 : size_t(it - times.begin()) - 1;
    if (i + 1 >= times.size()) i = times.size() - 2;
    const double dt = times[i + 1] - times[i];  // negative
    const double s = (t - times[i]) / dt;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * psi[i] + (s3 - 2 * s2 + s) * dt * dpsi_dt[i] +
           (-2 * s3 + 3 * s2) * psi[i + 1] + (s3 - s2) * dt * dpsi_dt[i + 1];
}

AdjointPath integrate_adjoint(const ProblemSpec& p, const Trajectory& traj, double epsilon,
                              const IntegratorConfig& cfg) {
    require_pmp_field(p.field);
    const double t_hat = require_quench_time(traj);
    if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
    if (epsilon >= t_hat) throw EpsilonTooLarge("epsilon must be below the quench time");
    const double T = t_hat - epsilon;
    if (T > traj.t_end())
        throw InvalidParameter("epsilon smaller than the terminal resolution gap");

    AdjointPath adj;
    adj.epsilon = epsilon;
    adj.terminal_condition = terminal_condition(p.field, traj.state_at(T));

    // Backward pass in the reversed clock tau = T - t.
    auto make_rhs = [&](double) {
        return [&](double tau, Vec2 w) {
            const Mat2 J = eval_jacobian(p.field, traj.state_at(T - tau));
            return J.transpose() * w;
        };
    };
    auto step_cap = [](double, Vec2, Vec2) { return kInf; };
    auto next_break = [&](double tau) {
        // trajectory nodes, seen from the reversed clock
        const auto& ts = traj.times;
        auto it = std::lower_bound(ts.begin(), ts.end(), T - tau);
        while (it != ts.begin()) {
            const double cand = T - *(--it);
            if (cand - tau > 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + tau))
                return cand;
        }
        return kInf;
    };

    double c1 = 0.0;
    auto record = [&](double tau, Vec2 w, Vec2 dw_dtau) {
        adj.times.push_back(T - tau);
        adj.psi.push_back(w);
        adj.dpsi_dt.push_back(-1.0 * dw_dtau);
        const double dist = singular_distance(p.field, traj.state_at(T - tau));
        c1 = std::max(c1, norm(w) / dist);
        return true;
    };

    {
        const Mat2 J = eval_jacobian(p.field, traj.state_at(T));
        record(0.0, adj.terminal_condition, J.transpose() * adj.terminal_condition);
    }
    detail::adaptive_drive<Vec2>(0.0, adj.terminal_condition, T, cfg.rtol, cfg.atol, kInf,
                                 make_rhs, step_cap, next_break, record);
    adj.decay_constant = c1;
    return adj;
}

SensitivityPath integrate_sensitivity(const ProblemSpec& p, const Trajectory& traj,
                                      const ControlSignal& u_alt, double horizon,
                                      const IntegratorConfig& cfg) {
    require_pmp_field(p.field);
    const double t_hat = require_quench_time(traj);
    if (!(horizon > 0.0) || horizon >= t_hat || horizon > traj.t_end())
        throw InvalidParameter("horizon must sit inside the non-quench window");

    const ControlSignal& u = traj.control;
    SensitivityPath path;
    path.times.push_back(0.0);
    path.z.push_back({0.0, 0.0});

    auto make_rhs = [&](double t_begin) {
        const Mat2 B_step = p.B.value(t_begin);
        const Vec2 du = eval_control(u_alt, t_begin) - eval_control(u, t_begin);
        return [&, B_step, du](double t, Vec2 z) {
            const Mat2 J = eval_jacobian(p.field, traj.state_at(t));
            return J * z + B_step * du;
        };
    };
    auto step_cap = [](double, Vec2, Vec2) { return kInf; };
    auto next_break = [&](double t) {
        return std::min({next_node_after(traj.times, t), next_control_break(u, t),
                         next_control_break(u_alt, t), next_matrix_break(p.B, t)});
    };
    auto record = [&](double t, Vec2 z, Vec2) {
        path.times.push_back(t);
        path.z.push_back(z);
        return true;
    };

    detail::adaptive_drive<Vec2>(0.0, {0.0, 0.0}, horizon, cfg.rtol, cfg.atol, kInf, make_rhs,
                                 step_cap, next_break, record);
    return path;
}

DualityCheck adjoint_duality(const ProblemSpec& p, const Trajectory& traj,
                             const AdjointPath& adj, const ControlSignal& u_alt, double horizon,
                             const IntegratorConfig& cfg) {
    require_pmp_field(p.field);
    if (!(horizon > 0.0) || horizon > adj.t_terminal() || horizon > traj.t_end())
        throw InvalidParameter("horizon must sit inside the adjoint window");

    const ControlSignal& u = traj.control;
    auto make_rhs = [&](double t_begin) {
        const Mat2 B_step = p.B.value(t_begin);
        const Vec2 du = eval_control(u_alt, t_begin) - eval_control(u, t_begin);
        return [&, B_step, du](double t, ZQ s) {
            const Mat2 J = eval_jacobian(p.field, traj.state_at(t));
            const Vec2 bdu = B_step * du;
            return ZQ{J * s.z + bdu, dot(adj.psi_at(t), bdu)};
        };
    };
    auto step_cap = [](double, ZQ, ZQ) { return kInf; };
    auto next_break = [&](double t) {
        return std::min({next_node_after(traj.times, t), next_control_break(u, t),
                         next_control_break(u_alt, t), next_matrix_break(p.B, t)});
    };
    ZQ final{};
    auto record = [&](double, ZQ s, ZQ) {
        final = s;
        return true;
    };
    detail::adaptive_drive<ZQ>(0.0, ZQ{}, horizon, cfg.rtol, cfg.atol, kInf, make_rhs, step_cap,
                               next_break, record);

    DualityCheck check;
    check.pairing = dot(adj.psi_at(horizon), final.z);
    check.integral = final.q;
    return check;
}

PMPCertificate pmp_certificate(const ProblemSpec& p, const Trajectory& traj,
                               const ControlSignal& u_star, const AdjointPath& adj,
                               double residual_tol) {
    require_pmp_field(p.field);
    require_quench_time(traj);

    PMPCertificate cert;
    cert.terminal_norm = norm(adj.psi.front());

    double max_residual = -kInf;
    for (size_t i = 0; i < adj.times.size(); ++i) {
        const double t = adj.times[i];
        const Mat2 Bt = p.B.value(t);
        const Vec2 psi = adj.psi[i];
        const Vec2 best = pmp_argmax(psi, Bt, p.rho0);
        const Vec2 used = eval_control(u_star, t);
        max_residual = std::max(max_residual, dot(psi, Bt * (best - used)));
    }
    cert.max_residual = max_residual;

    // Earliest sample: adjoint times run backward, so it is the last one.
    const double t0 = adj.times.back();
    const Vec2 psi0 = adj.psi.back();
    const Vec2 y0 = traj.state_at(t0);
    if (p.field == FieldKind::F1) {
        cert.nontriviality_ratio = psi0.x / (1.0 - y0.x);
    } else {
        const double r = norm(y0);
        cert.nontriviality_ratio = dot((1.0 / (1.0 - r)) * y0, psi0);
    }

    cert.passed = cert.max_residual <= residual_tol && cert.nontriviality_ratio >= 0.1;
    return cert;
}

double penalty_value(const ProblemSpec& p, const ControlSignal& u, double t_star, double epsilon,
                     const IntegratorConfig& cfg) {
    require_pmp_field(p.field);
    if (!(epsilon > 0.0) || epsilon >= t_star)
        throw InvalidParameter("epsilon must lie in (0, t_star)");
    const double T = t_star - epsilon;
    const Trajectory traj = integrate_to_time(p, u, cfg, T);
    if (traj.quench) return 0.0;  // reached the target set before t_star - epsilon
    const Vec2 yT = traj.states.back();
    const double miss =
        p.field == FieldKind::F1 ? std::abs(yT.x - 1.0) : std::abs(norm(yT) - 1.0);
    return 0.5 * miss * miss;
}

namespace {

struct ArgmaxLaw final : FeedbackLaw {
    std::shared_ptr<const AdjointPath> adj;
    MatrixSignal B;
    double rho0;

    ArgmaxLaw(std::shared_ptr<const AdjointPath> a, MatrixSignal b, double r)
        : adj(std::move(a)), B(std::move(b)), rho0(r) {}

    Vec2 value(double t) const override {
        const double clamped = std::clamp(t, adj->times.back(), adj->times.front());
        return pmp_argmax(adj->psi_at(clamped), B.value(t), rho0);
    }
};

}  // namespace

ControlSignal make_feedback_control(std::shared_ptr<const AdjointPath> adj, MatrixSignal B,
                                    double rho0) {
    if (!adj || adj->times.empty()) throw InvalidParameter("feedback law needs an adjoint path");
    return ControlSignal::feedback(std::make_shared<ArgmaxLaw>(std::move(adj), std::move(B), rho0));
}

}  // namespace quench
