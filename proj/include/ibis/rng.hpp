#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ibis {

using Rng = std::mt19937_64;

// Stateless seed derivation: one base seed fans out into named sub-streams
// (stage, sample index, iteration, ...). SplitMix64 finalizer per component.
inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (std::uint64_t p : parts) h = mix(h ^ mix(p));
    return h;
}

// Portable uniform double in [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace ibis
