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

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "iqt/volume.hpp"

namespace iqt {

/// Nested-ellipsoid brain phantom: WM core inside a GM shell, zero background.
struct PhantomConfig {
    std::array<int, 3> dims{64, 64, 64};
    double spacing_mm = 0.7;
    double wm_intensity = 0.82;
    double gm_intensity = 0.64;
    double boundary_softness_mm = 0.5;
    int lesion_count = 0;
    std::uint64_t seed = 0;
    /// Outer (GM) semi-axes as fractions of the half field of view.
    std::array<double, 3> brain_extent{0.80, 0.85, 0.80};
    /// Inner (WM) semi-axes as fractions of the outer semi-axes.
    std::array<double, 3> wm_fraction{0.68, 0.70, 0.66};

    /// Throws ConfigError when the invariants fail or the shells do not fit.
    void validate() const;
};

struct Phantom {
    Volume3D image;
    TissueMasks masks;
};

Phantom generate_phantom(const PhantomConfig& cfg);

/// Per-subject configuration used by generate_cohort: axes, intensities and
/// seed jittered around `base` from derive_seed(seed, index).
PhantomConfig cohort_subject_config(const PhantomConfig& base, std::uint64_t seed, int index);

std::vector<Phantom> generate_cohort(int n_subjects, const PhantomConfig& base, std::uint64_t seed);

}  // namespace iqt
