#include "quench/problem_io.hpp"

#include <fstream>
#include <set>

#include "quench/errors.hpp"

namespace quench {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw InvalidParameter(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw InvalidParameter("unknown key '" + it.key() + "' in " + where);
    }
}

double get_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InvalidParameter(where + " is missing '" + key + "'");
    if (!j[key].is_number()) throw InvalidParameter(where + "." + key + " must be a number");
    return j[key].get<double>();
}

double get_number_or(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw InvalidParameter(where + "." + key + " must be a number");
    return j[key].get<double>();
}

Vec2 get_vec2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InvalidParameter(where + " must be a 2-element numeric array");
    return {j[0].get<double>(), j[1].get<double>()};
}

Mat2 get_mat2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2)
        throw InvalidParameter(where + " must be a 2x2 numeric array");
    const Vec2 r0 = get_vec2(j[0], where + "[0]");
    const Vec2 r1 = get_vec2(j[1], where + "[1]");
    return {r0.x, r0.y, r1.x, r1.y};
}

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }
json mat2_json(const Mat2& m) {
    return json::array({json::array({m.a11, m.a12}), json::array({m.a21, m.a22})});
}

FieldKind parse_field(const std::string& s) {
    if (s == "f1") return FieldKind::F1;
    if (s == "f2") return FieldKind::F2;
    if (s == "f3") return FieldKind::F3;
    throw InvalidParameter("field must be one of f1, f2, f3");
}

MatrixSignal parse_matrix_signal(const json& j) {
    reject_unknown_keys(j, {"kind", "matrix", "breakpoints", "matrices"}, "B");
    if (!j.contains("kind")) throw InvalidParameter("B is missing 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "constant") {
        if (!j.contains("matrix")) throw InvalidParameter("constant B needs 'matrix'");
        return MatrixSignal::constant(get_mat2(j["matrix"], "B.matrix"));
    }
    if (kind == "piecewise") {
        if (!j.contains("breakpoints") || !j.contains("matrices"))
            throw InvalidParameter("piecewise B needs 'breakpoints' and 'matrices'");
        std::vector<double> bps;
        for (const auto& b : j["breakpoints"]) bps.push_back(b.get<double>());
        std::vector<Mat2> mats;
        for (const auto& m : j["matrices"]) mats.push_back(get_mat2(m, "B.matrices[]"));
        return MatrixSignal::piecewise(std::move(bps), std::move(mats));
    }
    throw InvalidParameter("B.kind must be constant or piecewise");
}

ControlSignal parse_control(const json& j) {
    reject_unknown_keys(j, {"kind", "value", "grid_step", "values", "extension"}, "control");
    if (!j.contains("kind")) throw InvalidParameter("control is missing 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "zero") return ControlSignal::zero();
    if (kind == "constant") {
        if (!j.contains("value")) throw InvalidParameter("constant control needs 'value'");
        return ControlSignal::constant(get_vec2(j["value"], "control.value"));
    }
    if (kind == "piecewise") {
        if (!j.contains("grid_step") || !j.contains("values"))
            throw InvalidParameter("piecewise control needs 'grid_step' and 'values'");
        std::vector<Vec2> values;
        for (const auto& v : j["values"]) values.push_back(get_vec2(v, "control.values[]"));
        Extension ext = Extension::Hold;
        if (j.contains("extension")) {
            const std::string e = j["extension"].get<std::string>();
            if (e == "zero")
                ext = Extension::Zero;
            else if (e != "hold")
                throw InvalidParameter("control.extension must be hold or zero");
        }
        return ControlSignal::piecewise(j["grid_step"].get<double>(), std::move(values), ext);
    }
    throw InvalidParameter("control.kind must be zero, constant or piecewise");
}

SearchMethod parse_method(const std::string& s) {
    if (s == "brute") return SearchMethod::Brute;
    if (s == "sweep") return SearchMethod::Sweep;
    if (s == "direct") return SearchMethod::Direct;
    throw InvalidParameter("search.method must be brute, sweep or direct");
}

}  // namespace

ProblemFile problem_from_json(const json& j) {
    reject_unknown_keys(j, {"field", "y0", "rho0", "B", "control", "integrator", "search"},
                        "problem file");
    if (!j.contains("field") || !j.contains("y0") || !j.contains("rho0") || !j.contains("B"))
        throw InvalidParameter("problem file needs field, y0, rho0 and B");

    ProblemFile pf;
    pf.problem = ProblemSpec::make(parse_field(j["field"].get<std::string>()),
                                   get_vec2(j["y0"], "y0"), get_number(j, "rho0", "problem file"),
                                   parse_matrix_signal(j["B"]));
    pf.control = j.contains("control") ? parse_control(j["control"]) : ControlSignal::zero();
    if (pf.control.kind != ControlSignal::Kind::Zero &&
        pf.control.sup_norm() > pf.problem.rho0 * (1.0 + 1e-12))
        throw InvalidParameter("control exceeds the bound rho0");

    IntegratorConfig ic;
    if (j.contains("integrator")) {
        const json& ji = j["integrator"];
        reject_unknown_keys(ji, {"rtol", "atol", "delta_stop", "max_step", "t_cap"},
                            "integrator");
        ic.rtol = get_number_or(ji, "rtol", ic.rtol, "integrator");
        ic.atol = get_number_or(ji, "atol", ic.atol, "integrator");
        ic.delta_stop = get_number_or(ji, "delta_stop", ic.delta_stop, "integrator");
        ic.max_step = get_number_or(ji, "max_step", ic.max_step, "integrator");
        ic.t_cap = get_number_or(ji, "t_cap", 0.0, "integrator");
    }
    if (ic.t_cap == 0.0) ic.t_cap = 2.0 * quench_time_bound(pf.problem);
    ic.validate();
    pf.integrator = ic;

    SearchConfig sc;
    if (j.contains("search")) {
        const json& js = j["search"];
        reject_unknown_keys(js,
                            {"method", "n_intervals", "n_directions", "include_zero",
                             "sweep_damping", "max_iters", "conv_tol", "seed"},
                            "search");
        if (js.contains("method")) sc.method = parse_method(js["method"].get<std::string>());
        if (js.contains("n_intervals")) sc.n_intervals = js["n_intervals"].get<int>();
        if (js.contains("n_directions")) sc.n_directions = js["n_directions"].get<int>();
        if (js.contains("include_zero")) sc.include_zero = js["include_zero"].get<bool>();
        sc.sweep_damping = get_number_or(js, "sweep_damping", sc.sweep_damping, "search");
        if (js.contains("max_iters")) sc.max_iters = js["max_iters"].get<int>();
        sc.conv_tol = get_number_or(js, "conv_tol", sc.conv_tol, "search");
        if (js.contains("seed")) sc.seed = js["seed"].get<uint64_t>();
        if (sc.n_intervals < 1 || sc.n_directions < 2)
            throw InvalidParameter("search needs n_intervals >= 1 and n_directions >= 2");
    }
    pf.search = sc;
    return pf;
}

ProblemFile load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open problem file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidParameter(std::string("malformed JSON: ") + e.what());
    }
    return problem_from_json(j);
}

json echo_problem_file(const ProblemFile& pf) {
    json j;
    j["field"] = to_string(pf.problem.field);
    j["y0"] = vec2_json(pf.problem.y0);
    j["rho0"] = pf.problem.rho0;

    json jb;
    if (pf.problem.B.is_constant()) {
        jb["kind"] = "constant";
        jb["matrix"] = mat2_json(pf.problem.B.matrices.front());
    } else {
        jb["kind"] = "piecewise";
        jb["breakpoints"] = pf.problem.B.breakpoints;
        json mats = json::array();
        for (const auto& m : pf.problem.B.matrices) mats.push_back(mat2_json(m));
        jb["matrices"] = mats;
    }
    j["B"] = jb;

    json jc;
    switch (pf.control.kind) {
        case ControlSignal::Kind::Zero:
            jc["kind"] = "zero";
            break;
        case ControlSignal::Kind::Constant:
            jc["kind"] = "constant";
            jc["value"] = vec2_json(pf.control.constant_value);
            break;
        case ControlSignal::Kind::Piecewise: {
            jc["kind"] = "piecewise";
            jc["grid_step"] = pf.control.grid_step;
            json vals = json::array();
            for (const auto& v : pf.control.values) vals.push_back(vec2_json(v));
            jc["values"] = vals;
            jc["extension"] = pf.control.extension == Extension::Hold ? "hold" : "zero";
            break;
        }
        case ControlSignal::Kind::Feedback:
            throw Unsupported("feedback controls are not serializable");
    }
    j["control"] = jc;

    j["integrator"] = {{"rtol", pf.integrator.rtol},
                       {"atol", pf.integrator.atol},
                       {"delta_stop", pf.integrator.delta_stop},
                       {"max_step", pf.integrator.max_step},
                       {"t_cap", pf.integrator.t_cap}};
    j["search"] = {{"method", to_string(pf.search.method)},
                   {"n_intervals", pf.search.n_intervals},
                   {"n_directions", pf.search.n_directions},
                   {"include_zero", pf.search.include_zero},
                   {"sweep_damping", pf.search.sweep_damping},
                   {"max_iters", pf.search.max_iters},
                   {"conv_tol", pf.search.conv_tol},
                   {"seed", pf.search.seed}};
    return j;
}

json report_to_json(const CertificateReport& r) {
    return {{"name", r.name},
            {"passed", r.passed},
            {"worst_t", r.worst_t},
            {"worst_margin", r.worst_margin},
            {"detail", r.detail}};
}

json search_result_to_json(SearchMethod method, const SearchResult& r) {
    json j = {{"method", to_string(method)},
              {"best_t", r.best_t},
              {"bound", r.bound},
              {"zero_control_t", r.zero_control_t},
              {"evaluations", r.evaluations},
              {"converged", r.converged},
              {"no_descent", r.no_descent}};
    if (r.certificate) {
        j["certificate"] = {{"max_residual", r.certificate->max_residual},
                            {"nontriviality_ratio", r.certificate->nontriviality_ratio},
                            {"passed", r.certificate->passed}};
    } else {
        j["certificate"] = nullptr;
    }
    return j;
}

}  // namespace quench
