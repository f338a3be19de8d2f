#pragma once

#include <cstdint>

namespace adlab {

// Stateless counter-based random stream (splitmix64 finalizer). Value i of a
// stream keyed by `seed` is mix64(seed, i); any position can be generated
// independently, which keeps parallel sampling deterministic.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + counter * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace adlab
