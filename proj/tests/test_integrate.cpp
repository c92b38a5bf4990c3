#include <doctest.h>

#include <cmath>
#include <sstream>

#include "quench/analysis.hpp"
#include "quench/errors.hpp"
#include "quench/integrate.hpp"
#include "quench/random.hpp"

using namespace quench;

namespace {

ProblemSpec paper_example() {
    return ProblemSpec::make(FieldKind::F2, {0.75, 0.0}, 1.0,
                             MatrixSignal::constant({1, 0, 0, 0}));
}

ProblemSpec f1_below() {
    return ProblemSpec::make(FieldKind::F1, {0.95, 2.5}, 1.0,
                             MatrixSignal::constant(Mat2::identity()));
}

IntegratorConfig tight_cfg() {
    IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-14;
    cfg.delta_stop = 1e-7;
    return cfg;
}

}  // namespace

TEST_CASE("worked example: unit control quenches at 1/32") {
    const Trajectory traj =
        integrate_to_quench(paper_example(), ControlSignal::constant({1, 0}), {});
    REQUIRE(traj.quench.has_value());
    CHECK(std::abs(traj.quench->t_hat - 1.0 / 32.0) <= 1e-6);
    CHECK(traj.quench->bracket_lo <= traj.quench->t_hat);
    CHECK(traj.quench->t_hat <= traj.quench->bracket_hi);
    CHECK(traj.quench->t_hat > traj.times.back());
}

TEST_CASE("worked example: zero control quenches at -1/4 - ln(3/4)") {
    const Trajectory traj = integrate_to_quench(paper_example(), ControlSignal::zero(), {});
    const double expected = -0.25 - std::log(0.75);
    CHECK(std::abs(traj.quench->t_hat - expected) <= 1e-6);
}

TEST_CASE("f3 symmetric zero-control run quenches at (1-c)^2/2") {
    const double c = 0.9;
    const ProblemSpec p =
        ProblemSpec::make(FieldKind::F3, {c, c}, 1.0, MatrixSignal::constant(Mat2::identity()));
    const Trajectory traj = integrate_to_quench(p, ControlSignal::zero(), {});
    CHECK(std::abs(traj.quench->t_hat - 0.5 * (1.0 - c) * (1.0 - c)) <= 1e-6);
}

TEST_CASE("closed-form comparison values") {
    const auto chi1 = ComparisonSolution::chi_f1(0.9);
    CHECK(chi1.value(0.0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(chi1.value(0.0075) == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(chi1.quench_time() == doctest::Approx(0.01).epsilon(1e-15));
    CHECK_THROWS_AS(chi1.value(0.02), OutOfWindow);

    const auto chi2 = ComparisonSolution::chi_f2(0.75, 1.0);
    CHECK(chi2.quench_time() == doctest::Approx(3.0 / 32.0).epsilon(1e-15));
    CHECK(chi2.value(0.0) == doctest::Approx(0.75).epsilon(1e-15));

    const auto chi3 = ComparisonSolution::chi_f3(1.0);
    CHECK(chi3.quench_time() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(chi3.value(0.25) == doctest::Approx(1.0));
    CHECK(chi3.value(0.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("integrator reproduces the closed-form quench times to 1e-8") {
    const IntegratorConfig cfg = tight_cfg();
    const auto r1 = integrate_comparison_ode(ComparisonSolution::chi_f1(0.9), cfg);
    CHECK(std::abs(r1.quench->t_hat - 0.01) <= 1e-8);

    const auto r2 = integrate_comparison_ode(ComparisonSolution::chi_f2(0.75, 1.0), cfg);
    CHECK(std::abs(r2.quench->t_hat - 3.0 / 32.0) <= 1e-8);

    const auto r3 = integrate_comparison_ode(ComparisonSolution::chi_f3(1.0), cfg);
    CHECK(std::abs(r3.quench->t_hat - 0.25) <= 1e-8);
}

TEST_CASE("radial reduction matches the paper values and the planar run") {
    const auto with_drift = integrate_radial_f2(0.75, ScalarSignal::constant(1.0), {});
    CHECK(std::abs(with_drift.quench->t_hat - 1.0 / 32.0) <= 1e-6);

    const auto no_drift = integrate_radial_f2(0.75, ScalarSignal::zero(), {});
    CHECK(std::abs(no_drift.quench->t_hat - (-0.25 - std::log(0.75))) <= 1e-6);

    // Radial-symmetry oracle: a full planar run from (0.9, 0) with zero
    // control must match the scalar reduction.
    const ProblemSpec p = ProblemSpec::make(FieldKind::F2, {0.9, 0.0}, 1.0,
                                            MatrixSignal::constant({1, 0, 0, 0}));
    const Trajectory planar = integrate_to_quench(p, ControlSignal::zero(), tight_cfg());
    const auto radial = integrate_radial_f2(0.9, ScalarSignal::zero(), tight_cfg());
    CHECK(std::abs(planar.quench->t_hat - radial.quench->t_hat) <= 1e-8);
}

TEST_CASE("comparison-theorem ordering holds along below-branch runs") {
    // F1: y1(t) >= chi(t) for the scalar comparison started at y1_0.
    const ProblemSpec p1 = f1_below();
    const auto chi1 = ComparisonSolution::chi_f1(p1.y0.x);
    const Trajectory t1 =
        integrate_to_quench(p1, ControlSignal::piecewise(0.001, {{1, 0}, {0, -1}, {-1, 0}}), {});
    for (size_t i = 0; i < t1.size(); ++i)
        CHECK(t1.states[i].x >= chi1.value(t1.times[i]) - 1e-9);

    // F2: the radius dominates the chi_f2 comparison.
    const ProblemSpec p2 = paper_example();
    const auto chi2 = ComparisonSolution::chi_f2(0.75, p2.k0);
    const Trajectory t2 = integrate_to_quench(p2, ControlSignal::constant({0, 1}), {});
    for (size_t i = 0; i < t2.size(); ++i)
        CHECK(norm(t2.states[i]) >= chi2.value(t2.times[i]) - 1e-9);
}

TEST_CASE("rate ceiling is stable under halving rtol") {
    IntegratorConfig cfg;
    const ProblemSpec p = paper_example();
    const Trajectory a = integrate_to_quench(p, ControlSignal::constant({1, 0}), cfg);
    cfg.rtol *= 0.5;
    const Trajectory b = integrate_to_quench(p, ControlSignal::constant({1, 0}), cfg);
    auto ceiling = [](const Trajectory& t) {
        double m = 0.0;
        for (size_t i = 0; i < t.size(); ++i)
            m = std::max(m, std::pow(t.quench->t_hat - t.times[i], 2.0 / 3.0) /
                                singular_distance(t.problem.field, t.states[i]));
        return m;
    };
    const double ma = ceiling(a);
    const double mb = ceiling(b);
    CHECK(std::isfinite(ma));
    CHECK(std::abs(ma - mb) <= 0.05 * std::max(ma, mb));
}

TEST_CASE("approach exponent fits 1/2 on the closed-form runs") {
    const IntegratorConfig cfg = tight_cfg();
    for (const auto& comp :
         {ComparisonSolution::chi_f1(0.9), ComparisonSolution::chi_f2(0.75, 1.0),
          ComparisonSolution::chi_f3(1.0)}) {
        const auto run = integrate_comparison_ode(comp, cfg);
        CHECK(std::abs(fit_approach_exponent(run) - 0.5) <= 0.05);
    }
}

TEST_CASE("halving delta_stop moves t_hat by less than the bracket width") {
    for (const bool unit_control : {true, false}) {
        IntegratorConfig cfg;
        const ControlSignal u =
            unit_control ? ControlSignal::constant({1, 0}) : ControlSignal::zero();
        const Trajectory a = integrate_to_quench(paper_example(), u, cfg);
        cfg.delta_stop *= 0.5;
        const Trajectory b = integrate_to_quench(paper_example(), u, cfg);
        CHECK(std::abs(a.quench->t_hat - b.quench->t_hat) < a.quench->bracket_width());
    }

    IntegratorConfig cfg;
    const Trajectory a = integrate_to_quench(f1_below(), ControlSignal::constant({0.3, 0.4}), cfg);
    cfg.delta_stop *= 0.5;
    const Trajectory b = integrate_to_quench(f1_below(), ControlSignal::constant({0.3, 0.4}), cfg);
    CHECK(std::abs(a.quench->t_hat - b.quench->t_hat) < a.quench->bracket_width());
}

TEST_CASE("bracket width respects the 10*delta_stop^2 budget") {
    const IntegratorConfig cfg;
    for (const ProblemSpec& p : {paper_example(), f1_below()}) {
        const Trajectory t = integrate_to_quench(p, ControlSignal::zero(), cfg);
        CHECK(t.quench->bracket_width() <= 10.0 * cfg.delta_stop * cfg.delta_stop);
    }
}

TEST_CASE("horizon errors and time-limited runs") {
    IntegratorConfig cfg;
    cfg.t_cap = 0.01;  // well before the 1/32 quench
    CHECK_THROWS_AS(
        integrate_to_quench(paper_example(), ControlSignal::constant({1, 0}), cfg),
        HorizonExceeded);

    const Trajectory partial =
        integrate_to_time(paper_example(), ControlSignal::constant({1, 0}), {}, 0.01);
    CHECK_FALSE(partial.quench.has_value());
    CHECK(partial.times.back() == doctest::Approx(0.01).epsilon(1e-12));

    const Trajectory full =
        integrate_to_time(paper_example(), ControlSignal::constant({1, 0}), {}, 0.05);
    CHECK(full.quench.has_value());  // quenched before the stop time
}

TEST_CASE("tail extrapolation follows the dominant-balance model") {
    // Synthetic F1 tail: y1 one micron from the target, slope 2*y2.
    const std::vector<double> times{0.4998, 0.4999, 0.5};
    const std::vector<Vec2> states{{1.0 - 3e-6, 2.0}, {1.0 - 2e-6, 2.0}, {1.0 - 1e-6, 2.0}};
    const QuenchEstimate est = estimate_quench_time(FieldKind::F1, 1.0, times, states);
    CHECK(est.t_hat == doctest::Approx(0.5 + 1e-12 / 4.0).epsilon(1e-12));
    CHECK(est.terminal_y2_or_radius == doctest::Approx(2.0));

    // Wrong-direction tail.
    const std::vector<Vec2> rising{{1.0 - 1e-6, 2.0}, {1.0 - 2e-6, 2.0}, {1.0 - 3e-6, 2.0}};
    CHECK_THROWS_AS(estimate_quench_time(FieldKind::F1, 1.0, times, rising), ModelMismatch);

    const std::vector<double> two{0.1, 0.2};
    const std::vector<Vec2> two_states{{0.9, 2.0}, {0.91, 2.0}};
    CHECK_THROWS_AS(estimate_quench_time(FieldKind::F1, 1.0, two, two_states), InvalidParameter);
}

TEST_CASE("identical inputs give bitwise-identical trajectories") {
    const Trajectory a =
        integrate_to_quench(paper_example(), ControlSignal::constant({1, 0}), {});
    const Trajectory b =
        integrate_to_quench(paper_example(), ControlSignal::constant({1, 0}), {});
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.times[i] == b.times[i]);
        CHECK(a.states[i] == b.states[i]);
    }
    CHECK(a.quench->t_hat == b.quench->t_hat);
}

TEST_CASE("breakpoints are honored exactly") {
    // A control jump at t = 0.01 must land on a node.
    const auto u = ControlSignal::piecewise(0.01, {{1, 0}, {0, 0}, {1, 0}, {0, 0}});
    const Trajectory traj = integrate_to_quench(paper_example(), u, {});
    bool found = false;
    for (double t : traj.times) found = found || t == 0.01;
    CHECK(found);
}

TEST_CASE("trajectory interpolation is consistent with the samples") {
    const Trajectory traj =
        integrate_to_quench(paper_example(), ControlSignal::constant({1, 0}), {});
    for (size_t i = 0; i < traj.size(); i += 3) {
        const Vec2 y = traj.state_at(traj.times[i]);
        CHECK(norm(y - traj.states[i]) <= 1e-14 * (1.0 + norm(y)));
    }
    // Midpoints stay on the radial line (y2 = 0 for this run).
    const double tm = 0.5 * (traj.times[0] + traj.times[1]);
    CHECK(std::abs(traj.state_at(tm).y) <= 1e-14);
    CHECK_THROWS_AS(traj.state_at(traj.t_end() + 1.0), InvalidParameter);
}

TEST_CASE("config validation") {
    IntegratorConfig cfg;
    cfg.delta_stop = 1e-12;  // violates delta_stop > 100*atol
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
    cfg = {};
    cfg.rtol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
}

TEST_CASE("trajectory csv format") {
    const Trajectory traj =
        integrate_to_quench(paper_example(), ControlSignal::constant({1, 0}), {});
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    const std::string csv = os.str();
    CHECK(csv.rfind("t,y1,y2,f1,f2,dist\n", 0) == 0);
    CHECK(csv.find("# t_hat=") != std::string::npos);
    CHECK(csv.find(" bracket=") != std::string::npos);

    // One row per accepted step plus header and trailer.
    size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == traj.size() + 2);

    // Locale-independent '.' decimals: every data row splits into 6 fields.
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.rfind("#", 0) == 0) continue;
        size_t commas = 0;
        for (char ch : line) commas += ch == ',';
        CHECK(commas == 5);
    }
}
