#include "ltree/sampler/rng.hpp"

#include <cmath>
#include <numbers>

#include "ltree/error.hpp"

namespace ltree
{

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    return Rng(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b));
}

double Rng::uniform01()
{
    // (k + 0.5) / 2^53 never hits 0 or 1.
    const std::uint64_t k = next() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    if (bound == 0)
        throw InvalidArgument("Rng::below: bound must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do
        x = next();
    while (x >= limit);
    return x % bound;
}

int Rng::between(int lo, int hi)
{
    if (hi < lo)
        throw InvalidArgument("Rng::between: empty range");
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::normal()
{
    if (_has_spare)
    {
        _has_spare = false;
        return _spare;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    _spare = r * std::sin(theta);
    _has_spare = true;
    return r * std::cos(theta);
}

}
