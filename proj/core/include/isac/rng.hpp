#pragma once

#include <cstdint>
#include <random>

namespace isac {

/// splitmix64 finalizer; full-period mixing of a 64-bit counter.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based sub-seed derivation so trials are independent and the
/// result does not depend on the parallel schedule.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    return std::mt19937_64(derive_seed(seed, stream));
}

} // namespace isac
