#pragma once

#include <cstdint>
#include <random>

namespace quench {

// Seeded generator with hand-rolled uniform draws.  mt19937_64 output is
// specified bit-for-bit, so results are reproducible across platforms;
// std::uniform_real_distribution is not, which is why it is avoided here.
struct Rng {
    std::mt19937_64 eng;

    explicit Rng(uint64_t seed) : eng(seed) {}

    double uniform() { return double(eng() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return eng() % n; }
};

}  // namespace quench
