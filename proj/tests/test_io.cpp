#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "quench/errors.hpp"
#include "quench/problem_io.hpp"

using namespace quench;
using nlohmann::json;

namespace {

std::string data_path(const std::string& name) {
    return std::string(QUENCH_TEST_DATA) + "/" + name;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QUENCH_CLI_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("problem file load and canonical echo round-trip") {
    const ProblemFile pf = load_problem_file(data_path("paper_example.json"));
    CHECK(pf.problem.field == FieldKind::F2);
    CHECK(pf.problem.k0 == doctest::Approx(1.0));
    CHECK(pf.control.kind == ControlSignal::Kind::Constant);
    // Defaults resolved on load: t_cap = 2x the analytic bound.
    CHECK(pf.integrator.t_cap == doctest::Approx(2.0 * 3.0 / 32.0));

    const json echoed = echo_problem_file(pf);
    const ProblemFile reloaded = problem_from_json(echoed);
    const json echoed_again = echo_problem_file(reloaded);
    CHECK(echoed.dump() == echoed_again.dump());  // byte-identical echo
}

TEST_CASE("unknown keys and malformed input are rejected") {
    json j = {{"field", "f2"},
              {"y0", {0.75, 0.0}},
              {"rho0", 1.0},
              {"B", {{"kind", "constant"}, {"matrix", {{1.0, 0.0}, {0.0, 0.0}}}}}};
    CHECK_NOTHROW(problem_from_json(j));

    json with_unknown = j;
    with_unknown["rho"] = 2.0;
    CHECK_THROWS_AS(problem_from_json(with_unknown), InvalidParameter);

    json nested_unknown = j;
    nested_unknown["B"]["norm"] = 1.0;
    CHECK_THROWS_AS(problem_from_json(nested_unknown), InvalidParameter);

    json missing = j;
    missing.erase("rho0");
    CHECK_THROWS_AS(problem_from_json(missing), InvalidParameter);

    CHECK_THROWS_AS(load_problem_file(data_path("malformed.json")), InvalidParameter);
    CHECK_THROWS_AS(load_problem_file(data_path("missing.json")), InvalidParameter);
}

TEST_CASE("inadmissible problems are rejected at load") {
    json j = {{"field", "f2"},
              {"y0", {0.75, 0.0}},
              {"rho0", 1.0},
              {"B", {{"kind", "constant"}, {"matrix", {{1.0, 0.0}, {0.0, 0.0}}}}},
              {"control", {{"kind", "constant"}, {"value", {2.0, 0.0}}}}};
    CHECK_THROWS_AS(problem_from_json(j), InvalidParameter);  // ||u|| > rho0

    j["control"] = {{"kind", "zero"}};
    j["y0"] = {0.1, 0.0};  // outside the seed region
    CHECK_THROWS_AS(problem_from_json(j), InvalidParameter);
}

TEST_CASE("report and search-result JSON carry the pinned fields") {
    CertificateReport r;
    r.name = "x";
    r.passed = true;
    r.worst_t = 0.5;
    r.worst_margin = 0.25;
    r.detail = "d";
    const json jr = report_to_json(r);
    for (const char* key : {"name", "passed", "worst_t", "worst_margin", "detail"})
        CHECK(jr.contains(key));

    SearchResult res;
    res.best_t = 0.03;
    res.bound = 0.09;
    res.zero_control_t = 0.04;
    res.evaluations = 3;
    res.converged = true;
    const json js = search_result_to_json(SearchMethod::Brute, res);
    for (const char* key : {"method", "best_t", "bound", "zero_control_t", "evaluations",
                            "converged", "no_descent", "certificate"})
        CHECK(js.contains(key));
    CHECK(js["certificate"].is_null());
}

TEST_CASE("cli exit codes") {
    CHECK(run_cli("quench-time --problem " + data_path("paper_example.json")) == 0);
    CHECK(run_cli("simulate --problem " + data_path("malformed.json")) == 2);
    CHECK(run_cli("optimize --problem " + data_path("f3_symmetric.json") + " --method sweep") ==
          2);
    CHECK(run_cli("simulate --problem " + data_path("missing.json")) == 2);
}

TEST_CASE("cli simulate writes the trajectory csv") {
    const std::string out = "/tmp/quench_test_traj.csv";
    std::remove(out.c_str());
    CHECK(run_cli("simulate --problem " + data_path("paper_example.json") + " --out " + out) ==
          0);
    std::ifstream in(out);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,y1,y2,f1,f2,dist");
    std::string line, last;
    while (std::getline(in, line)) last = line;
    CHECK(last.rfind("# t_hat=", 0) == 0);
    std::remove(out.c_str());
}
