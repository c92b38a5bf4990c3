#pragma once

// Embedded Dormand-Prince 5(4) pair with PI step-size control.  Shared by the
// quench integrator (2-D and scalar) and the adjoint/variational passes.  The
// driver is deterministic: identical inputs produce identical step sequences.

#include <algorithm>
#include <cmath>
#include <limits>

#include "quench/errors.hpp"
#include "quench/geometry.hpp"

namespace quench::detail {

inline double err_component(double e, double y0, double y1, double atol, double rtol) {
    const double sc = atol + rtol * std::max(std::abs(y0), std::abs(y1));
    return e / sc;
}

inline double err_norm(double e, double y0, double y1, double atol, double rtol) {
    return std::abs(err_component(e, y0, y1, atol, rtol));
}

inline double err_norm(Vec2 e, Vec2 y0, Vec2 y1, double atol, double rtol) {
    const double ex = err_component(e.x, y0.x, y1.x, atol, rtol);
    const double ey = err_component(e.y, y0.y, y1.y, atol, rtol);
    return std::sqrt(0.5 * (ex * ex + ey * ey));
}

// One trial step.  k1 must hold rhs(t, y); on return k7 holds rhs(t+h, y_new)
// evaluated with the same rhs (first-same-as-last structure of the pair).
// Returns the scaled error norm (accept when <= 1).
template <class S, class RHS>
double dp45_try(const RHS& rhs, double t, const S& y, const S& k1, double h,
                double atol, double rtol, S& y_new, S& k7) {
    const S k2 = rhs(t + h * (1.0 / 5.0), y + h * (1.0 / 5.0) * k1);
    const S k3 = rhs(t + h * (3.0 / 10.0), y + h * ((3.0 / 40.0) * k1 + (9.0 / 40.0) * k2));
    const S k4 = rhs(t + h * (4.0 / 5.0),
                     y + h * ((44.0 / 45.0) * k1 - (56.0 / 15.0) * k2 + (32.0 / 9.0) * k3));
    const S k5 = rhs(t + h * (8.0 / 9.0),
                     y + h * ((19372.0 / 6561.0) * k1 - (25360.0 / 2187.0) * k2 +
                              (64448.0 / 6561.0) * k3 - (212.0 / 729.0) * k4));
    const S k6 = rhs(t + h, y + h * ((9017.0 / 3168.0) * k1 - (355.0 / 33.0) * k2 +
                                     (46732.0 / 5247.0) * k3 + (49.0 / 176.0) * k4 -
                                     (5103.0 / 18656.0) * k5));
    y_new = y + h * ((35.0 / 384.0) * k1 + (500.0 / 1113.0) * k3 + (125.0 / 192.0) * k4 -
                     (2187.0 / 6784.0) * k5 + (11.0 / 84.0) * k6);
    k7 = rhs(t + h, y_new);
    const S err = h * ((71.0 / 57600.0) * k1 - (71.0 / 16695.0) * k3 + (71.0 / 1920.0) * k4 -
                       (17253.0 / 339200.0) * k5 + (22.0 / 525.0) * k6 - (1.0 / 40.0) * k7);
    return err_norm(err, y, y_new, atol, rtol);
}

struct StepController {
    double h = 0.0;
    double facold = 1e-4;

    void accept(double err) {
        const double e = std::max(err, 1e-10);
        double fac = 0.9 * std::pow(e, -0.17) * std::pow(facold, 0.04);
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        facold = std::max(err, 1e-4);
    }
    void reject(double err) {
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
};

// Adaptive driver.
//   make_rhs(t_begin) -> callable (t, y) -> S; signals frozen at t_begin stay
//     frozen for the whole trial step, matching piecewise-constant inputs.
//   step_cap(t, y, k1) -> additional step bound (return +inf for none).
//   next_break(t) -> first signal discontinuity strictly after t (+inf for
//     none). Steps never cross a break.
//   on_accept(t, y, d_in) -> false to stop early. d_in is the derivative at
//     the node computed with the step's own (left-interval) signal values.
template <class S, class MakeRhs, class StepCap, class NextBreak, class OnAccept>
void adaptive_drive(double t0, S y0, double t_end, double rtol, double atol, double max_step,
                    MakeRhs&& make_rhs, StepCap&& step_cap, NextBreak&& next_break,
                    OnAccept&& on_accept) {
    const double inf = std::numeric_limits<double>::infinity();
    const double end_eps = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t_end));

    double t = t0;
    S y = y0;
    StepController ctrl;
    long steps = 0;

    while (t < t_end - end_eps) {
        auto rhs = make_rhs(t);
        const S k1 = rhs(t, y);

        double hmax = std::min(max_step, t_end - t);
        const double brk = next_break(t);
        if (brk < inf) hmax = std::min(hmax, brk - t);
        hmax = std::min(hmax, step_cap(t, y, k1));
        if (!(hmax > 0.0)) throw Error("integration step bound collapsed to zero");

        if (ctrl.h == 0.0) ctrl.h = hmax;  // first step: start from the caps
        double h = std::min(ctrl.h, hmax);

        for (;;) {
            if (t + h == t) throw Error("integration step size underflow");
            S y_new, k7;
            const double err = dp45_try(rhs, t, y, k1, h, atol, rtol, y_new, k7);
            if (err <= 1.0) {
                ctrl.h = h;
                ctrl.accept(err);
                t = t + h;
                y = y_new;
                if (!on_accept(t, y, k7)) return;
                break;
            }
            ctrl.h = h;
            ctrl.reject(err);
            h = std::min(ctrl.h, hmax);
        }
        if (++steps > 50'000'000) throw Error("integration exceeded the step budget");
    }
}

}  // namespace quench::detail
