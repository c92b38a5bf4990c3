// Wall-clock comparison of the OpenMP candidate evaluation against the
// serial reference (QUENCH_NO_PARALLEL=1 path).  Both must produce the same
// SearchResult; the unit tests assert that, this tool reports the speed.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "quench/optimize.hpp"

using namespace quench;

namespace {

double timed_search(const ProblemSpec& p, const SearchConfig& cfg, SearchResult& out) {
    const auto start = std::chrono::steady_clock::now();
    out = brute_force_search(p, cfg);
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    int n_intervals = 3;
    int n_directions = 8;
    if (argc > 1) n_intervals = std::atoi(argv[1]);
    if (argc > 2) n_directions = std::atoi(argv[2]);

    const ProblemSpec p = ProblemSpec::make(FieldKind::F2, {0.75, 0.0}, 1.0,
                                            MatrixSignal::constant({1.0, 0.0, 0.0, 0.0}));
    SearchConfig cfg;
    cfg.n_intervals = n_intervals;
    cfg.n_directions = n_directions;

    SearchResult serial, parallel;
#ifdef _WIN32
    _putenv_s("QUENCH_NO_PARALLEL", "1");
#else
    setenv("QUENCH_NO_PARALLEL", "1", 1);
#endif
    const double t_serial = timed_search(p, cfg, serial);
#ifdef _WIN32
    _putenv_s("QUENCH_NO_PARALLEL", "");
#else
    unsetenv("QUENCH_NO_PARALLEL");
#endif
    const double t_parallel = timed_search(p, cfg, parallel);

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("candidates: %ld\n", serial.evaluations);
    std::printf("serial:     %8.3f s   best_t=%.12g\n", t_serial, serial.best_t);
    std::printf("parallel:   %8.3f s   best_t=%.12g   (%d threads)\n", t_parallel,
                parallel.best_t, threads);
    std::printf("speedup:    %8.2fx\n", t_serial / t_parallel);
    const bool same = serial.best_t == parallel.best_t &&
                      serial.evaluations == parallel.evaluations;
    std::printf("identical results: %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
}
