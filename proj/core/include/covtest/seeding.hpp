#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace covtest {

using Seed = std::uint64_t;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Deterministically combines a master seed with a path of indices, e.g.
// derive_seed(master, {entry, replication}). Distinct paths give
// statistically independent streams.
Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> path) noexcept;

using Engine = std::mt19937_64;

inline Engine make_engine(Seed seed) { return Engine{seed}; }

}  // namespace covtest
