#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quench/analysis.hpp"
#include "quench/pmp.hpp"

namespace quench {

enum class SearchMethod { Brute, Sweep, Direct };

const char* to_string(SearchMethod m);

struct SearchConfig {
    SearchMethod method = SearchMethod::Brute;
    int n_intervals = 4;      // control grid pieces over [0, analytic bound]
    int n_directions = 8;     // brute: angular resolution of the bang-bang set
    bool include_zero = true;
    double sweep_damping = 0.5;  // alpha in (0,1]
    int max_iters = 100;
    // Sweep stop: fraction of intervals whose value moved more than 1e-6.
    double conv_tol = 1e-3;
    uint64_t seed = 42;  // direct-search restarts
};

struct IterationRecord {
    int iteration = 0;
    double t_hat = 0.0;
    double step_measure = 0.0;  // fraction of intervals that moved
};

struct SearchResult {
    ControlSignal best_control;
    double best_t = 0.0;         // bracket midpoint of the best run
    double bound = 0.0;          // analytic quench-time bound
    double zero_control_t = 0.0;
    std::optional<PMPCertificate> certificate;  // F1/F2 only
    long evaluations = 0;
    bool converged = false;
    bool no_descent = false;  // sweep made no progress for 5 iterations
    std::vector<IterationRecord> history;
};

// Enumerate piecewise-constant bang-bang controls (per-interval values
// rho0*(cos th_j, sin th_j), plus zero when include_zero) and keep the
// fastest-quenching candidate.  Ties on the bracket midpoint go to the
// lexicographically first candidate.  Candidates are evaluated in parallel
// when OpenMP is available and QUENCH_NO_PARALLEL is not set; the reduction
// is index-ordered either way, so results are identical.
SearchResult brute_force_search(const ProblemSpec& p, const SearchConfig& cfg,
                                const IntegratorConfig& icfg = {});

// Forward-backward sweep: integrate, compute the adjoint, replace each grid
// interval by the damped PMP argmax, repeat.  F1/F2 only.
SearchResult sweep_search(const ProblemSpec& p, const SearchConfig& cfg,
                          const IntegratorConfig& icfg = {},
                          const std::optional<ControlSignal>& initial = std::nullopt);

// Derivative-free simplex search over per-interval control values with
// projection onto the rho0 ball; multi-start from the config seed.  Works
// for every field (the fallback where no adjoint exists).
SearchResult direct_search(const ProblemSpec& p, const SearchConfig& cfg,
                           const IntegratorConfig& icfg = {});

// Informal robustness check: n random small perturbations of u (Ekeland
// distance at most window/10, staying in the ball) must keep the solution
// quench-free on [0, window].
CertificateReport perturbation_smoke_test(const ProblemSpec& p, const ControlSignal& u,
                                          double window, int n, uint64_t seed = 42,
                                          const IntegratorConfig& icfg = {});

}  // namespace quench
