/*
 * Copyright 2026 The lowfield-iqt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace iqt {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Child seed for the i-th sub-stream of `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) noexcept { return mix64(mix64(seed) ^ mix64(i + 1)); }

/// 64-bit FNV-1a, used to key pipeline stages by name.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Seed for a named pipeline stage: mix64(global ^ fnv1a(stage)).
constexpr std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage) noexcept {
    return mix64(global_seed ^ fnv1a(stage));
}

/// Standard normal draw that depends only on (key, counter), so per-voxel noise
/// is independent of traversal order. Box-Muller on two hashed uniforms.
inline double counter_normal(std::uint64_t key, std::uint64_t counter) noexcept {
    const std::uint64_t a = mix64(key ^ mix64(2 * counter));
    const std::uint64_t b = mix64(key ^ mix64(2 * counter + 1));
    // 53-bit uniforms; u1 in (0,1], u2 in [0,1)
    const double u1 = (double(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = double(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace iqt
