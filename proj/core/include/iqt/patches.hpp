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
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqt/decimation.hpp"
#include "iqt/volume.hpp"

namespace iqt {

using Index3 = std::array<int, 3>;

/// Patch geometry in low-field voxels. High-field patches are k times deeper.
struct PatchSpec {
    int k = 4;
    Index3 low_size{32, 32, 8};
    Index3 strides{8, 16, 4};
    double background_threshold = 0.80;
    double background_epsilon = kDefaultBackgroundEpsilon;

    /// Canonical geometry for factor k: 32x32x(32/k) patches with strides 8, 16, 16/k.
    static PatchSpec for_factor(int k);

    Index3 high_size() const noexcept { return {low_size[0], low_size[1], k * low_size[2]}; }
    std::size_t low_voxels() const noexcept { return std::size_t(low_size[0]) * low_size[1] * low_size[2]; }
    std::size_t high_voxels() const noexcept { return low_voxels() * std::size_t(k); }

    void validate() const;
    bool operator==(const PatchSpec&) const = default;
};

struct PatchPair {
    std::vector<float> low;   // low_size, x-fastest
    std::vector<float> high;  // high_size, x-fastest
    Index3 origin{};          // low-field voxel index; (ix, iy, k*iz) in high-field space
    int subject_id = 0;
    int augmentation_id = 0;
};

struct PatchLibrary {
    PatchSpec spec;
    std::vector<PatchPair> pairs;
    int kept_positions = 0;  // M, per augmentation
    int n_aug = 1;           // N
};

/// Patch origins on the stride lattice with the patch fully inside `lo_dims`.
std::vector<Index3> patch_grid(const Index3& lo_dims, const PatchSpec& spec);

/// patch_grid plus, per axis, one boundary-snapped origin when the lattice
/// misses the far edge. Covers every voxel.
std::vector<Index3> covering_patch_grid(const Index3& lo_dims, const PatchSpec& spec);

/// True when fewer than threshold * n of the patch voxels in `reference` are <= epsilon.
bool keep_patch(const Volume3D& reference, const Index3& origin, const PatchSpec& spec);

std::vector<float> crop(const Volume3D& v, const Index3& origin, const Index3& size);

/// One pair per lattice origin whose low patch passes keep_patch. Background is
/// judged on `background_reference` (the noiseless low-field volume) when given.
PatchLibrary extract_pairs(const Volume3D& lo, const Volume3D& hi, const PatchSpec& spec,
                           const Volume3D* background_reference = nullptr, int subject_id = 0,
                           int augmentation_id = 0);

/// Runs the simulator n_aug times in sampled mode and pairs every realization
/// with the same high-field patches. Kept positions come from the first
/// realization's noiseless volume.
PatchLibrary augment_library(const Volume3D& hi, const TissueMasks& m, const SimConfig& cfg, const SnrPrior& prior,
                             int n_aug, const PatchSpec& spec, Rng& rng, int subject_id = 0);

/// Concatenates libraries that share a spec.
PatchLibrary merge_libraries(std::vector<PatchLibrary> libs);

/// Uniform sample without replacement of round-half-even(fraction * size) pairs,
/// kept in library order.
PatchLibrary subsample(const PatchLibrary& lib, double fraction, Rng& rng);

struct PlacedPatch {
    Index3 origin;  // high-field voxel index
    Index3 size;
    std::vector<float> values;
};

/// Averages overlapping patches voxelwise; throws DataError naming an uncovered voxel.
Volume3D assemble(const std::vector<PlacedPatch>& patches, const Grid& hi_grid);

/// Number of patches covering each voxel.
std::vector<int> coverage_counts(const std::vector<PlacedPatch>& patches, const Grid& hi_grid);

// Library persistence: <dir>/manifest.json plus shard_NNNN.lo.iqtv / shard_NNNN.hi.iqtv,
// each shard stacking up to `shard_size` patches along z.
// `provenance` is stored verbatim under the manifest's "provenance" key.
void save_library(const PatchLibrary& lib, const std::filesystem::path& dir, int shard_size = 64,
                  const nlohmann::json& provenance = nlohmann::json::object());
PatchLibrary load_library(const std::filesystem::path& dir);

}  // namespace iqt
