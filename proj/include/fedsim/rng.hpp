#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedsim {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Derives an independent sub-seed from a master seed. Distinct (round,
// purpose, index) triples map to distinct streams; the derivation is a pure
// integer hash and stable across platforms.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t round, std::string_view purpose,
                          std::uint64_t index = 0);

} // namespace fedsim
