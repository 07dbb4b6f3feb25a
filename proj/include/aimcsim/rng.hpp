/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cstdint>
#include <random>

namespace aimcsim {

/// All randomness flows through explicitly seeded mt19937_64 streams so that
/// results are bit-reproducible under a fixed master seed regardless of
/// harness-level parallelism.
using RngStream = std::mt19937_64;

/// SplitMix64 finalizer, used as the seed-mixing primitive.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Substream derivation rule: stream #index of a master seed is seeded with
/// mix64(master ^ mix64(index + 1)). Nested derivation (cells within sweeps,
/// tiles within runs) chains this rule.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 1));
}

inline RngStream make_stream(std::uint64_t master, std::uint64_t index) {
  return RngStream(derive_seed(master, index));
}

inline double uniform01(RngStream &rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double gauss(RngStream &rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

} // namespace aimcsim
