#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "quench/controls.hpp"
#include "quench/fields.hpp"

namespace quench {

struct IntegratorConfig {
    double rtol = 1e-9;
    double atol = 1e-12;
    // Stop radius: integration ends once the singular distance drops to this.
    double delta_stop = 1e-6;
    double max_step = 0.25;
    // Hard horizon; 0 means "derive as twice the analytic quench-time bound".
    double t_cap = 0.0;

    void validate() const;
};

// Quench-time estimate extrapolated from the stopped tail, with a bracket
// from the dominant-balance model and the +-K0 drift bound.
struct QuenchEstimate {
    double t_hat = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    Vec2 terminal_state{};
    // Finite limit data of the model: y2 for F1/F3, the radius for F2.
    double terminal_y2_or_radius = 0.0;

    double bracket_width() const { return bracket_hi - bracket_lo; }
};

// Sampled solution path.  Node derivatives are stored twice because control
// discontinuities sit exactly on nodes: deriv_out[i] uses the signal values
// of [t_i, t_{i+1}), deriv_in[i] those of [t_{i-1}, t_i).
struct Trajectory {
    ProblemSpec problem;
    ControlSignal control;
    std::vector<double> times;
    std::vector<Vec2> states;
    std::vector<Vec2> deriv_in;
    std::vector<Vec2> deriv_out;
    std::optional<QuenchEstimate> quench;

    size_t size() const { return times.size(); }
    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }

    // Cubic Hermite interpolation on the stored (state, derivative) pairs;
    // consistent with the integrator to 4th order.
    Vec2 state_at(double t) const;
    Vec2 deriv_at(double t) const;
};

// Integrate dy/dt = f(y) + B(t) u(t) from y0 until the singular distance
// reaches cfg.delta_stop, then attach a QuenchEstimate.  Control and B
// discontinuities are step boundaries.  Throws HorizonExceeded when the time
// cap is reached without quenching and LeftSeedRegion when a sampled state
// violates the branch predicate.
Trajectory integrate_to_quench(const ProblemSpec& p, const ControlSignal& u,
                               const IntegratorConfig& cfg);

// Same dynamics, but stop at t_stop when quench has not happened first.  A
// run that quenches early carries a QuenchEstimate; otherwise the last sample
// is at t_stop.
Trajectory integrate_to_time(const ProblemSpec& p, const ControlSignal& u,
                             const IntegratorConfig& cfg, double t_stop);

// Extrapolate the quench time from a stopped trajectory tail using the
// square-root dominant-balance model:
//   F1: (1-y1)^2 ~ 2 y2 (Tq - t);  F2: (1-|y|)^2 ~ 2 |y| (Tq - t);
//   F3: (1-y1)(1-y2) ~ 2 (Tq - t).
// Requires at least 3 tail samples ending within the stop radius; throws
// ModelMismatch when the tail distance is not shrinking.
QuenchEstimate estimate_quench_time(FieldKind kind, double k0, std::span<const double> times,
                                    std::span<const Vec2> states);

// Closed-form comparison solutions chi(.) used as oracles:
//   chi_f1: 1 -+ sqrt((y1_0-1)^2 - t), quenching at (y1_0-1)^2
//   chi_f2: 1 - sqrt((r0-1)^2 - (1-1/(2k0+1)) t), quenching at
//           (2k0+1)(r0-1)^2/(2k0)
//   chi_f3: 1 - sqrt(1/(4k0^2) - t) from 1 - 1/(2k0), quenching at 1/(4k0^2)
struct ComparisonSolution {
    enum class Kind { ChiF1, ChiF2, ChiF3 };
    Kind kind = Kind::ChiF1;
    double start = 0.0;  // y1_0 for chi_f1, ||y0|| for chi_f2, 1-1/(2k0) for chi_f3
    double k0 = 0.0;

    static ComparisonSolution chi_f1(double y1_0);
    static ComparisonSolution chi_f2(double y0_norm, double k0);
    static ComparisonSolution chi_f3(double k0);

    double quench_time() const;
    // Value at t in [0, quench_time()]; throws OutOfWindow past it.
    double value(double t) const;
    // Right-hand side slope numerator m in dchi/dt = m/(1-chi).
    double slope_numerator() const;
};

// Scalar piecewise-constant signal (radial drift term).
struct ScalarSignal {
    enum class Kind { Zero, Constant, Piecewise };
    Kind kind = Kind::Zero;
    double constant_value = 0.0;
    double grid_step = 0.0;
    std::vector<double> values;

    static ScalarSignal zero();
    static ScalarSignal constant(double v);
    static ScalarSignal piecewise(double grid_step, std::vector<double> values);

    double value(double t) const;
    double sup_norm() const;
};

struct ScalarTrajectory {
    std::vector<double> times;
    std::vector<double> values;
    std::optional<QuenchEstimate> quench;
};

// 1-D radial reduction of F2: dr/dt = r/(1-r) + drift(t).  Oracle for full
// planar runs started from radial data with radial drift.
ScalarTrajectory integrate_radial_f2(double r0, const ScalarSignal& drift,
                                     const IntegratorConfig& cfg);

// Numerical integration of a comparison ODE dchi/dt = m/(1-chi); its quench
// estimate must reproduce the closed-form quench time.
ScalarTrajectory integrate_comparison_ode(const ComparisonSolution& comp,
                                          const IntegratorConfig& cfg);

// CSV with header t,y1,y2,f1,f2,dist, one row per accepted step, and a final
// comment row `# t_hat=<v> bracket=<lo>,<hi>` when the run quenched.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace quench
