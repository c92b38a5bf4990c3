#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quench/optimize.hpp"
#include "quench/random.hpp"

namespace quench {

// Seeded generators for the randomized suites.  Draws land strictly inside
// the seed region (both branches) with moderate K0.
ProblemSpec sample_problem(FieldKind kind, Rng& rng);
// Piecewise bang-bang control covering [0, quench_time_bound(p)].
ControlSignal sample_bang_bang_control(const ProblemSpec& p, Rng& rng);

// Property suites behind `verify`.  Suite names: paper-example, bounds,
// invariants, rates, pmp, all.  Reports aggregate each check over its runs;
// the worst case is recorded in margin/detail.
std::vector<CertificateReport> verify_suite(const std::string& suite, uint64_t seed);

std::vector<CertificateReport> verify_paper_example();
std::vector<CertificateReport> verify_bounds(uint64_t seed);
std::vector<CertificateReport> verify_invariants(uint64_t seed);
std::vector<CertificateReport> verify_rates(uint64_t seed);
std::vector<CertificateReport> verify_pmp(uint64_t seed);

}  // namespace quench
