#include "quench/controls.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "quench/errors.hpp"

namespace quench {

MatrixSignal MatrixSignal::constant(const Mat2& m) {
    MatrixSignal s;
    s.breakpoints = {0.0};
    s.matrices = {m};
    return s;
}

MatrixSignal MatrixSignal::piecewise(std::vector<double> breakpoints, std::vector<Mat2> matrices) {
    MatrixSignal s;
    s.breakpoints = std::move(breakpoints);
    s.matrices = std::move(matrices);
    s.validate();
    return s;
}

Mat2 MatrixSignal::value(double t) const {
    // Last piece whose breakpoint is <= t; the final piece extends forever.
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    const size_t idx = it == breakpoints.begin() ? 0 : size_t(it - breakpoints.begin()) - 1;
    return matrices[idx];
}

double MatrixSignal::max_norm() const {
    double m = 0.0;
    for (const auto& b : matrices) m = std::max(m, spectral_norm(b));
    return m;
}

void MatrixSignal::validate() const {
    if (matrices.empty() || breakpoints.size() != matrices.size())
        throw InvalidParameter("matrix signal needs one matrix per breakpoint");
    if (breakpoints.front() != 0.0)
        throw InvalidParameter("matrix signal must start at t = 0");
    for (size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw InvalidParameter("matrix signal breakpoints must be strictly increasing");
    bool nontrivial = false;
    for (const auto& m : matrices) {
        if (!is_finite(m)) throw InvalidParameter("matrix signal has non-finite entries");
        if (spectral_norm(m) > 0.0) nontrivial = true;
    }
    if (!nontrivial) throw InvalidParameter("matrix signal must be nontrivial");
}

double compute_k0(const MatrixSignal& B, double rho0) {
    if (!(rho0 > 0.0) || !std::isfinite(rho0)) throw InvalidParameter("rho0 must be positive");
    if (B.matrices.empty()) throw InvalidParameter("matrix signal has no pieces");
    return B.max_norm() * rho0;
}

ControlSignal ControlSignal::zero() { return {}; }

ControlSignal ControlSignal::constant(Vec2 v) {
    ControlSignal u;
    u.kind = Kind::Constant;
    u.constant_value = v;
    return u;
}

ControlSignal ControlSignal::piecewise(double grid_step, std::vector<Vec2> values,
                                       Extension extension) {
    if (!(grid_step > 0.0)) throw InvalidParameter("piecewise control needs grid_step > 0");
    if (values.empty()) throw InvalidParameter("piecewise control needs at least one value");
    ControlSignal u;
    u.kind = Kind::Piecewise;
    u.grid_step = grid_step;
    u.values = std::move(values);
    u.extension = extension;
    return u;
}

ControlSignal ControlSignal::feedback(std::shared_ptr<const FeedbackLaw> law) {
    if (!law) throw InvalidParameter("feedback control needs a law");
    ControlSignal u;
    u.kind = Kind::Feedback;
    u.law = std::move(law);
    return u;
}

double ControlSignal::sup_norm() const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return norm(constant_value);
        case Kind::Piecewise: {
            double m = 0.0;
            for (const auto& v : values) m = std::max(m, norm(v));
            return m;
        }
        case Kind::Feedback:
            throw Unsupported("sup_norm undefined for feedback controls");
    }
    return 0.0;
}

Vec2 eval_control(const ControlSignal& u, double t) {
    switch (u.kind) {
        case ControlSignal::Kind::Zero: return {0.0, 0.0};
        case ControlSignal::Kind::Constant: return u.constant_value;
        case ControlSignal::Kind::Piecewise: {
            const double idx = std::floor(t / u.grid_step);
            if (idx < 0.0) return u.values.front();
            if (idx >= double(u.values.size()))
                return u.extension == Extension::Hold ? u.values.back() : Vec2{0.0, 0.0};
            return u.values[size_t(idx)];
        }
        case ControlSignal::Kind::Feedback: return u.law->value(t);
    }
    return {0.0, 0.0};
}

Vec2 pmp_argmax(Vec2 psi, const Mat2& Bt, double rho0) {
    if (!(rho0 > 0.0)) throw InvalidParameter("rho0 must be positive");
    const Vec2 w = Bt.transpose() * psi;
    const double wn = norm(w);
    const double tie_eps = 1e-12 * (1.0 + norm(psi)) * (1.0 + spectral_norm(Bt));
    if (wn <= tie_eps) return {0.0, 0.0};
    return (rho0 / wn) * w;
}

namespace {

// Breakpoints of an open-loop control on [0, horizon], including 0 and horizon.
std::vector<double> control_breakpoints(const ControlSignal& u, double horizon) {
    std::vector<double> bp = {0.0};
    if (u.kind == ControlSignal::Kind::Piecewise) {
        // One extra point at the end of the defined range where the extension kicks in.
        const size_t n = u.values.size();
        for (size_t k = 1; k <= n; ++k) {
            const double t = double(k) * u.grid_step;
            if (t < horizon) bp.push_back(t);
        }
    }
    bp.push_back(horizon);
    return bp;
}

}  // namespace

double ekeland_distance(const ControlSignal& u, const ControlSignal& v, double horizon) {
    if (u.kind == ControlSignal::Kind::Feedback || v.kind == ControlSignal::Kind::Feedback)
        throw Unsupported("ekeland distance undefined for feedback controls");
    if (!(horizon > 0.0)) throw InvalidParameter("horizon must be positive");

    std::set<double> merged;
    for (double t : control_breakpoints(u, horizon)) merged.insert(t);
    for (double t : control_breakpoints(v, horizon)) merged.insert(t);

    double measure = 0.0;
    double prev = 0.0;
    bool first = true;
    for (double t : merged) {
        if (first) {
            first = false;
            prev = t;
            continue;
        }
        const Vec2 a = eval_control(u, prev);
        const Vec2 b = eval_control(v, prev);
        const bool agree = std::abs(a.x - b.x) <= 1e-12 && std::abs(a.y - b.y) <= 1e-12;
        if (!agree) measure += t - prev;
        prev = t;
    }
    return measure;
}

Vec2 apply_B(const MatrixSignal& B, double t, Vec2 u_val) { return B.value(t) * u_val; }

ProblemSpec ProblemSpec::make(FieldKind field, Vec2 y0, double rho0, MatrixSignal B) {
    if (!is_finite(y0)) throw InvalidParameter("y0 has non-finite coordinates");
    B.validate();
    ProblemSpec p;
    p.field = field;
    p.y0 = y0;
    p.rho0 = rho0;
    p.B = std::move(B);
    p.k0 = compute_k0(p.B, rho0);
    const auto branch = in_seed_region(field, y0, p.k0);
    if (!branch)
        throw InvalidParameter(std::string("y0 is not in the seed region of ") +
                               to_string(field) + " for k0 derived from B and rho0");
    p.branch = *branch;
    return p;
}

}  // namespace quench
