#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ctxrec {

// Derives an independent seed for a named sub-stream ("synth", "learner",
// "tie-audit", ...) so each consumer of randomness stays reproducible on
// its own.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = base ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::string_view stream) { return Rng(derive_seed(base, stream)); }

}  // namespace ctxrec
