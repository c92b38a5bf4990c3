#pragma once

#include <string>

#include <json.hpp>

#include "quench/analysis.hpp"
#include "quench/optimize.hpp"

namespace quench {

// On-disk experiment description: problem + control + integrator + search.
// Loading validates the schema (unknown keys are rejected) and makes every
// default explicit, so echo(load(x)) is a fixed point of load.
struct ProblemFile {
    ProblemSpec problem;
    ControlSignal control;       // zero / constant / piecewise only
    IntegratorConfig integrator; // t_cap resolved to 2x the analytic bound
    SearchConfig search;
};

ProblemFile load_problem_file(const std::string& path);
ProblemFile problem_from_json(const nlohmann::json& j);

// Canonical JSON with all defaults explicit; keys are emitted sorted.
nlohmann::json echo_problem_file(const ProblemFile& pf);

nlohmann::json report_to_json(const CertificateReport& r);
nlohmann::json search_result_to_json(SearchMethod method, const SearchResult& r);

}  // namespace quench
