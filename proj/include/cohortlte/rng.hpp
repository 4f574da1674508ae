#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cohortlte {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of the substream identified by `path` under `seed`. Distinct paths
/// give statistically independent engines, so work items can run in any
/// order or on any thread and still draw the same numbers.
constexpr std::uint64_t substream_seed(std::uint64_t seed,
                                       std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(seed);
    for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Engine(substream_seed(seed, path));
}

/// Stream tags keep the substreams of different subsystems apart.
namespace stream {
inline constexpr std::uint64_t kUsers = 0x5553;
inline constexpr std::uint64_t kBootstrap = 0xB007;
inline constexpr std::uint64_t kBenchParams = 0xBE9C;
inline constexpr std::uint64_t kBenchData = 0xDA7A;
}  // namespace stream

}  // namespace cohortlte
