#pragma once

#include <memory>
#include <vector>

#include "quench/fields.hpp"
#include "quench/geometry.hpp"

namespace quench {

// Piecewise-constant matrix signal B(.).  A constant signal is stored as a
// single piece starting at t = 0.  The last piece extends to +infinity.
struct MatrixSignal {
    std::vector<double> breakpoints;  // strictly increasing, first is 0
    std::vector<Mat2> matrices;       // one per piece

    static MatrixSignal constant(const Mat2& m);
    static MatrixSignal piecewise(std::vector<double> breakpoints, std::vector<Mat2> matrices);

    bool is_constant() const { return matrices.size() == 1; }
    // Value at t; pieces are left-closed intervals [b_k, b_{k+1}).
    Mat2 value(double t) const;
    // esssup over pieces of the spectral norm.
    double max_norm() const;
    // Throws InvalidParameter unless the signal is well-formed and nontrivial
    // (at least one piece has a nonzero entry).
    void validate() const;
};

// Worst-case drift magnitude K0 = esssup ||B(s)|| * rho0.
double compute_k0(const MatrixSignal& B, double rho0);

// Closed-loop control laws (e.g. the PMP argmax along a frozen adjoint path)
// implement this interface; the snapshot they capture is immutable.
struct FeedbackLaw {
    virtual ~FeedbackLaw() = default;
    virtual Vec2 value(double t) const = 0;
};

// How a piecewise control continues past its last defined piece.
enum class Extension { Hold, Zero };

// An admissible open-loop (or feedback) control u(.) with ||u(t)|| <= rho0.
// The bound itself belongs to the owning problem and is checked there.
struct ControlSignal {
    enum class Kind { Zero, Constant, Piecewise, Feedback };

    Kind kind = Kind::Zero;
    Vec2 constant_value{};
    double grid_step = 0.0;          // piecewise: constant on [k*step, (k+1)*step)
    std::vector<Vec2> values;        // piecewise values
    Extension extension = Extension::Hold;
    std::shared_ptr<const FeedbackLaw> law;

    static ControlSignal zero();
    static ControlSignal constant(Vec2 v);
    static ControlSignal piecewise(double grid_step, std::vector<Vec2> values,
                                   Extension extension = Extension::Hold);
    static ControlSignal feedback(std::shared_ptr<const FeedbackLaw> law);

    // Largest value norm over the pieces (sup over time for open-loop kinds).
    // Throws Unsupported for feedback controls.
    double sup_norm() const;
};

// Value of u at time t >= 0.  Piecewise intervals are left-closed; past the
// last piece the control either holds its last value or drops to zero,
// depending on the extension mode.
Vec2 eval_control(const ControlSignal& u, double t);

// Maximizer of <psi, B u> over the closed ball ||u|| <= rho0: the boundary
// point rho0 * w/||w|| with w = B^T psi, or zero when the condition is
// degenerate (||w|| below the tie threshold; any ball point is then optimal
// and zero is the reproducible choice).
Vec2 pmp_argmax(Vec2 psi, const Mat2& Bt, double rho0);

// Lebesgue measure of { t in [0, horizon] : u(t) != v(t) }, computed exactly
// on the merged breakpoint grid.  Values agree when equal within 1e-12
// componentwise.  Throws Unsupported for feedback controls.
double ekeland_distance(const ControlSignal& u, const ControlSignal& v, double horizon);

// B(t) * u_val; the components are the drift terms b1, b2.
Vec2 apply_B(const MatrixSignal& B, double t, Vec2 u_val);

// Fully specified quench problem: field, start, control bound and matrix
// signal, plus the derived worst-case drift K0 and seed-region branch.
struct ProblemSpec {
    FieldKind field = FieldKind::F1;
    Vec2 y0{};
    double rho0 = 1.0;
    MatrixSignal B;
    double k0 = 0.0;    // derived
    Branch branch = Branch::Below;  // derived

    // Validates inputs, computes k0 and the branch.  Throws InvalidParameter
    // when y0 is not in the seed region for the derived k0.
    static ProblemSpec make(FieldKind field, Vec2 y0, double rho0, MatrixSignal B);
};

}  // namespace quench
