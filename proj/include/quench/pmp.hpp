#pragma once

#include <memory>
#include <vector>

#include "quench/integrate.hpp"

namespace quench {

// Epsilon-regularized adjoint psi on [0, t_hat - epsilon], integrated
// backward from the field-specific terminal condition
//   F1: psi(T) = (1 - y1(T), 0)
//   F2: psi(T) = ((1 - ||y(T)||)/||y(T)||) y(T)
// along the frozen trajectory.  Samples are stored in the backward
// (decreasing-time) order they were produced.
struct AdjointPath {
    std::vector<double> times;     // decreasing, from t_hat - epsilon down to 0
    std::vector<Vec2> psi;
    std::vector<Vec2> dpsi_dt;     // derivative at each node, for interpolation
    double epsilon = 0.0;
    Vec2 terminal_condition{};
    // Smallest recorded constant with ||psi(t)|| <= c * singular_distance(y(t)).
    double decay_constant = 0.0;

    double t_terminal() const { return times.front(); }
    Vec2 psi_at(double t) const;  // cubic Hermite between stored nodes
};

// Default regularization: keeps T = t_hat - epsilon inside the well-resolved
// part of the trajectory; the 2/3 exponent matches the rate-estimate scale.
double default_epsilon(double t_hat, double delta_stop);

// Backward integration of psi' = -J^T(y(t)) psi (J the standard Jacobian;
// the transpose realizes the row-gradient convention used in the adjoint
// systems).  Throws UnsupportedField for F3, for which no terminal condition
// exists, and EpsilonTooLarge when epsilon >= t_hat.
AdjointPath integrate_adjoint(const ProblemSpec& p, const Trajectory& traj, double epsilon,
                              const IntegratorConfig& cfg = {});

// Solution of the variational equation z' = J(y(t)) z + B(t)(u_alt - u),
// z(0) = 0, on [0, horizon]; first-order response of the trajectory to the
// control perturbation u_alt - u.
struct SensitivityPath {
    std::vector<double> times;  // increasing
    std::vector<Vec2> z;

    Vec2 terminal() const { return z.back(); }
};

SensitivityPath integrate_sensitivity(const ProblemSpec& p, const Trajectory& traj,
                                      const ControlSignal& u_alt, double horizon,
                                      const IntegratorConfig& cfg = {});

// Both sides of the duality identity
//   <psi(T), z(T)> = integral_0^T <psi, B (u_alt - u)> dt,
// with z and the integral advanced jointly by the same stepper.
struct DualityCheck {
    double pairing = 0.0;   // <psi(T), z(T)>
    double integral = 0.0;  // integral of <psi, B (u_alt - u)>
};

DualityCheck adjoint_duality(const ProblemSpec& p, const Trajectory& traj,
                             const AdjointPath& adj, const ControlSignal& u_alt, double horizon,
                             const IntegratorConfig& cfg = {});

// Maximum-condition residuals for a candidate optimal control.
struct PMPCertificate {
    // sup over samples of <psi, B(argmax - u_star)>; nonnegative up to rounding.
    double max_residual = 0.0;
    double terminal_norm = 0.0;  // ||psi(t_hat - epsilon)||
    // psi1(0)/(1 - y1(0)) for F1, <y(0)/(1-||y(0)||), psi(0)> for F2; the
    // regularized identities drive this ratio to 1 as t -> t*, so a value
    // bounded away from 0 certifies nontriviality.
    double nontriviality_ratio = 0.0;
    bool passed = false;
};

PMPCertificate pmp_certificate(const ProblemSpec& p, const Trajectory& traj,
                               const ControlSignal& u_star, const AdjointPath& adj,
                               double residual_tol = 1e-5);

// Penalty J_eps(u): half the squared distance of the time-(t_star - eps)
// state to the target set; 0 when the run quenches before t_star - eps.
double penalty_value(const ProblemSpec& p, const ControlSignal& u, double t_star, double epsilon,
                     const IntegratorConfig& cfg = {});

// Control that pointwise maximizes <psi(t), B(t) u> along a frozen adjoint
// snapshot; times past the adjoint window hold the windows's endpoint values.
ControlSignal make_feedback_control(std::shared_ptr<const AdjointPath> adj, MatrixSignal B,
                                    double rho0);

}  // namespace quench
