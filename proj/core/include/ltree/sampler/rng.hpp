#pragma once

#include <cstdint>
#include <random>

namespace ltree
{

// SplitMix64 finaliser; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seedable 64-bit generator: std::mt19937_64, whose output sequence is fixed
// by the C++ standard. All distributions below are computed from raw 64-bit
// draws so results are identical across standard library implementations.
class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0) :
        _engine(seed)
    {}

    // Stream for (seed, a, b), e.g. (global seed, epoch, example index).
    static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

    std::uint64_t next() { return _engine(); }

    // Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform01();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, bound), bound > 0; unbiased (rejection).
    std::uint64_t below(std::uint64_t bound);

    // Uniform integer in [lo, hi].
    int between(int lo, int hi);

    // Standard normal via Box-Muller.
    double normal();

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 _engine;
    bool _has_spare = false;
    double _spare = 0.0;
};

}
