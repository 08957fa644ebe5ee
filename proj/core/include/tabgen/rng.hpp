// Deterministic randomness helpers. mt19937_64 output is fully specified by
// the standard; the std::uniform_* distributions are not, so every draw in
// this library goes through the hand-rolled mappings below and results are
// reproducible bit-for-bit across platforms.

#ifndef TABGEN_RNG_HPP
#define TABGEN_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace tabgen {

/// splitmix64 step; used to derive independent stream seeds from
/// (master seed, index) pairs.
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by rejection; bound must be >= 1.
inline uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % bound;
}

/// Fisher-Yates with explicit draws (std::shuffle is implementation-defined).
template <typename T>
void deterministic_shuffle(std::vector<T>& values, std::mt19937_64& rng) {
    for (size_t i = values.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(uniform_below(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace tabgen

#endif  // TABGEN_RNG_HPP
