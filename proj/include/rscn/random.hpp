#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rscn {

using Rng = std::mt19937_64;

/// Seed of the named sub-stream of `seed` ("task", "init", "candidates",
/// "noise", ...). Distinct names give statistically independent streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream)
{
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (h | 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL; // splitmix64 finalizer
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::string_view stream)
{
    return Rng(derive_seed(seed, stream));
}

/// Uniform draw on [-scale, scale].
inline double uniform_symmetric(Rng& rng, double scale)
{
    return std::uniform_real_distribution<double>(-scale, scale)(rng);
}

} // namespace rscn
