// Command-line front end: simulate / quench-time / bounds / invariants /
// adjoint / optimize / verify.  Configs are JSON, time series are CSV,
// reports are one JSON object per line on stdout.
//
// Exit codes: 0 success, 1 failed certificate, 2 validation error,
// 3 integration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "quench/errors.hpp"
#include "quench/problem_io.hpp"
#include "quench/verify.hpp"

using nlohmann::json;
using namespace quench;

namespace {

struct CommonFlags {
    std::string problem_path;
    std::string out_path;
    double rtol = 0.0;
    double atol = 0.0;
    double delta = 0.0;
    double epsilon = 0.0;
    std::string method;
    uint64_t seed = 42;
};

void add_problem_flags(CLI::App* cmd, CommonFlags& f, bool need_out = false) {
    cmd->add_option("--problem", f.problem_path, "problem JSON file")->required();
    auto* out = cmd->add_option("--out", f.out_path, "output file");
    if (need_out) out->required();
    cmd->add_option("--rtol", f.rtol, "override relative tolerance");
    cmd->add_option("--atol", f.atol, "override absolute tolerance");
    cmd->add_option("--delta", f.delta, "override stop radius");
}

ProblemFile load_with_overrides(const CommonFlags& f) {
    ProblemFile pf = load_problem_file(f.problem_path);
    if (f.rtol > 0.0) pf.integrator.rtol = f.rtol;
    if (f.atol > 0.0) pf.integrator.atol = f.atol;
    if (f.delta > 0.0) pf.integrator.delta_stop = f.delta;
    pf.integrator.validate();
    return pf;
}

json run_summary(const ProblemFile& pf, const Trajectory& traj) {
    json j;
    j["t_hat"] = traj.quench->t_hat;
    j["bracket"] = {traj.quench->bracket_lo, traj.quench->bracket_hi};
    j["bound"] = quench_time_bound(pf.problem);
    j["problem"] = echo_problem_file(pf);
    return j;
}

int emit_reports(const std::vector<CertificateReport>& reports) {
    bool all_ok = true;
    for (const auto& r : reports) {
        std::cout << report_to_json(r).dump() << "\n";
        all_ok = all_ok && r.passed;
    }
    return all_ok ? 0 : 1;
}

int dispatch(const CLI::App& app, const std::string& name, const CommonFlags& f) {
    if (name == "simulate" || name == "quench-time") {
        const ProblemFile pf = load_with_overrides(f);
        const Trajectory traj = integrate_to_quench(pf.problem, pf.control, pf.integrator);
        if (name == "simulate" && !f.out_path.empty()) {
            std::ofstream out(f.out_path);
            if (!out) throw InvalidParameter("cannot open output file: " + f.out_path);
            write_trajectory_csv(out, traj);
        }
        std::cout << run_summary(pf, traj).dump() << "\n";
        return 0;
    }
    if (name == "bounds") {
        const ProblemFile pf = load_with_overrides(f);
        const Trajectory traj = integrate_to_quench(pf.problem, pf.control, pf.integrator);
        const double bound = quench_time_bound(pf.problem);
        CertificateReport r;
        r.name = "quench_time_bound";
        r.worst_t = traj.quench->t_hat;
        r.worst_margin = bound + traj.quench->bracket_width() - traj.quench->t_hat;
        r.passed = r.worst_margin >= 0.0;
        r.detail = "t_hat vs analytic bound " + std::to_string(bound);
        return emit_reports({r});
    }
    if (name == "invariants") {
        const ProblemFile pf = load_with_overrides(f);
        const Trajectory traj = integrate_to_quench(pf.problem, pf.control, pf.integrator);
        std::vector<CertificateReport> reports;
        reports.push_back(
            check_invariant_region(traj, RegionParams::defaults_for(pf.problem)));
        reports.push_back(check_monotone_approach(traj));
        reports.push_back(check_rate_estimate(traj));
        if (pf.problem.field == FieldKind::F3 && pf.problem.branch == Branch::Below)
            reports.push_back(check_f3_ratio(traj));
        return emit_reports(reports);
    }
    if (name == "adjoint") {
        const ProblemFile pf = load_with_overrides(f);
        const Trajectory traj = integrate_to_quench(pf.problem, pf.control, pf.integrator);
        const double eps = f.epsilon > 0.0
                               ? f.epsilon
                               : default_epsilon(traj.quench->t_hat, pf.integrator.delta_stop);
        const AdjointPath adj = integrate_adjoint(pf.problem, traj, eps, pf.integrator);

        std::ostream* os = &std::cout;
        std::ofstream file;
        if (!f.out_path.empty()) {
            file.open(f.out_path);
            if (!file) throw InvalidParameter("cannot open output file: " + f.out_path);
            os = &file;
        }
        char buf[256];
        *os << "t,psi1,psi2,ratio\n";
        for (size_t i = adj.times.size(); i-- > 0;) {
            const double t = adj.times[i];
            const Vec2 psi = adj.psi[i];
            const Vec2 y = traj.state_at(t);
            const double ratio = pf.problem.field == FieldKind::F1
                                     ? psi.x / (1.0 - y.x)
                                     : dot((1.0 / (1.0 - norm(y))) * y, psi);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t, psi.x, psi.y, ratio);
            *os << buf;
        }
        json j;
        j["epsilon"] = eps;
        j["decay_constant"] = adj.decay_constant;
        j["terminal_norm"] = norm(adj.psi.front());
        std::cout << j.dump() << "\n";
        return 0;
    }
    if (name == "optimize") {
        const ProblemFile pf = load_with_overrides(f);
        SearchConfig sc = pf.search;
        if (!f.method.empty()) {
            if (f.method == "brute")
                sc.method = SearchMethod::Brute;
            else if (f.method == "sweep")
                sc.method = SearchMethod::Sweep;
            else if (f.method == "direct")
                sc.method = SearchMethod::Direct;
            else
                throw InvalidParameter("unknown method: " + f.method);
        }
        SearchResult res;
        switch (sc.method) {
            case SearchMethod::Brute: res = brute_force_search(pf.problem, sc, pf.integrator); break;
            case SearchMethod::Sweep: res = sweep_search(pf.problem, sc, pf.integrator); break;
            case SearchMethod::Direct: res = direct_search(pf.problem, sc, pf.integrator); break;
        }
        const json j = search_result_to_json(sc.method, res);
        if (!f.out_path.empty()) {
            std::ofstream out(f.out_path);
            if (!out) throw InvalidParameter("cannot open output file: " + f.out_path);
            out << j.dump(2) << "\n";
        }
        std::cout << j.dump() << "\n";
        return 0;
    }
    if (name == "verify") {
        const auto* cmd = app.get_subcommand("verify");
        const std::string suite = cmd->get_option("--suite")->as<std::string>();
        return emit_reports(verify_suite(suite, f.seed));
    }
    throw InvalidParameter("unknown command");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quench-time simulation, certification and optimal-control search"};
    app.require_subcommand(1);

    CommonFlags f;
    auto* simulate = app.add_subcommand("simulate", "integrate to quench, write trajectory CSV");
    add_problem_flags(simulate, f);
    auto* quench_time = app.add_subcommand("quench-time", "integrate to quench, print summary");
    add_problem_flags(quench_time, f);
    auto* bounds = app.add_subcommand("bounds", "check the analytic quench-time bound");
    add_problem_flags(bounds, f);
    auto* invariants = app.add_subcommand("invariants", "run trajectory certificates");
    add_problem_flags(invariants, f);
    auto* adjoint = app.add_subcommand("adjoint", "backward adjoint pass, write CSV");
    add_problem_flags(adjoint, f);
    adjoint->add_option("--epsilon", f.epsilon, "regularization epsilon");
    auto* optimize = app.add_subcommand("optimize", "search for a quench-time-minimizing control");
    add_problem_flags(optimize, f);
    optimize->add_option("--method", f.method, "brute | sweep | direct");
    auto* verify = app.add_subcommand("verify", "run a property suite");
    std::string suite = "all";
    verify->add_option("--suite", suite, "paper-example | bounds | invariants | rates | pmp | all")
        ->capture_default_str();
    verify->add_option("--seed", f.seed, "suite seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        return dispatch(app, name, f);
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParamOutOfRange& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedField& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Unsupported& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
