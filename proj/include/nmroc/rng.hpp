#pragma once

// Seeded random streams.
//
// Every stochastic unit of work (a simulated dataset, a bootstrap replicate) gets
// its own stream, seeded by mixing (seed, stream index) through SplitMix64, so its
// draws do not depend on how work is scheduled across threads. The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard; the
// uniform and normal transforms below are implemented here rather than taken
// from <random> so results are identical across standard libraries.

#include <cstdint>
#include <random>

namespace nmroc {

std::uint64_t splitmix64(std::uint64_t x);

// Seed for stream `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Standard normal (Box-Muller).
    double normal();
    bool bernoulli(double p) { return uniform() < p; }
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace nmroc
