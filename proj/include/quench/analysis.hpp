#pragma once

#include <optional>
#include <span>
#include <string>

#include "quench/integrate.hpp"

namespace quench {

// Invariant-region thresholds.  Each parameter must sit in the admissible
// open range for the problem's K0:
//   k1  in (1-1/(2K0), 1)          k1t in (1, 1+1/(2K0))
//   k2  > K0 + 1/K0 - 1            k2t > K0 + 1
//   k3  in (1-1/(2K0+1), 1)        k3t in (1, 1+1/(2K0))
//   k4  in (1-e^{-3/2}/(2K0), 1)   k4t in (1, 1+e^{-3/2}/(2K0))
// Defaults derive from y0 (k1 = y1_0, k2 = y2_0, ...), which turns the
// certificate into "the trajectory never falls below its initial levels".
struct RegionParams {
    std::optional<double> k1, k2;    // F1 below
    std::optional<double> k1t, k2t;  // F1 above
    std::optional<double> k3, k3t;   // F2 below / above
    std::optional<double> k4, k4t;   // F3 below / above

    static RegionParams defaults_for(const ProblemSpec& p);
};

struct CertificateReport {
    std::string name;
    bool passed = false;
    double worst_t = 0.0;
    double worst_margin = 0.0;  // >= 0 means the inequality held everywhere
    std::string detail;
};

// Per-sample invariant-region check:
//   F1 below: y1 in [k1, 1), y2 >= k2;   F1 above: y1 in (1, k1t], y2 >= k2t
//   F2: ||y|| in [k3, 1) or (1, k3t]
//   F3: both coordinates in [k4, 1) or (1, k4t]
// Missing parameters fall back to the defaults derived from y0.
CertificateReport check_invariant_region(const Trajectory& traj, const RegionParams& params);

// Field-specific analytic quench-time upper bound:
//   F1: (y1_0-1)^2;  F2: (2K0+1)(||y0||-1)^2/(2K0);  F3: 1/(4K0^2).
// The same expressions bound the optimal time.
double quench_time_bound(const ProblemSpec& p);

// Rate-estimate surrogate: M = max over samples of
// (t_hat - t)^{2/3} / singular_distance(y(t)) must be finite and its running
// maximum must stabilize over the final decade of approach (growth < 10%).
CertificateReport check_rate_estimate(const Trajectory& traj);

// Below-branch F3 ratio bounds at every sample (tolerance 1e-9):
//   (1-y2)/(1-y1) <= (1-y2_0)/(1-y1_0) e^{3/2}  and the reciprocal analog.
CertificateReport check_f3_ratio(const Trajectory& traj);

// Singular distance strictly decreasing along samples (tolerance 1e-12); for
// F3 both coordinate distances must decrease.
CertificateReport check_monotone_approach(const Trajectory& traj);

// Least-squares slope of log(distance) against log(t_hat - t) over the last
// decade of approach.  The square-root law gives 0.5.
double fit_approach_exponent(std::span<const double> times, std::span<const double> dists,
                             double t_hat);
double fit_approach_exponent(const Trajectory& traj);
double fit_approach_exponent(const ScalarTrajectory& traj);

}  // namespace quench
