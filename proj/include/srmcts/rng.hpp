#pragma once

#include <cstdint>
#include <random>

namespace srmcts {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for (seed, stream); streams never share state.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    return Rng(splitmix64(seed ^ splitmix64(stream + 0x5851f42d4c957f2dULL)));
}

inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

} // namespace srmcts
