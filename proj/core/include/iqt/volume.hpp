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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace iqt {

/// Voxel grid metadata. Spacing is in millimetres.
struct Grid {
    int nx = 0, ny = 0, nz = 0;
    double sx = 1.0, sy = 1.0, sz = 1.0;

    std::size_t size() const noexcept { return std::size_t(nx) * std::size_t(ny) * std::size_t(nz); }
    std::size_t index(int x, int y, int z) const noexcept {
        return (std::size_t(z) * std::size_t(ny) + std::size_t(y)) * std::size_t(nx) + std::size_t(x);
    }
    bool same_shape(const Grid& o) const noexcept { return nx == o.nx && ny == o.ny && nz == o.nz; }
    bool operator==(const Grid&) const = default;

    /// Throws DataError on non-positive dims or spacing.
    void validate() const;
    /// Spacing rounded to single precision, as stored on disk.
    Grid canonical() const noexcept;
};

/// A 3D scalar field, x-fastest. Values are always finite.
class Volume3D {
public:
    Volume3D() = default;
    /// Zero-filled volume.
    explicit Volume3D(const Grid& grid);
    /// Takes ownership of `data`; throws on size mismatch or non-finite values.
    Volume3D(const Grid& grid, std::vector<float> data);

    const Grid& grid() const noexcept { return grid_; }
    int nx() const noexcept { return grid_.nx; }
    int ny() const noexcept { return grid_.ny; }
    int nz() const noexcept { return grid_.nz; }
    std::size_t size() const noexcept { return data_.size(); }

    float at(int x, int y, int z) const noexcept { return data_[grid_.index(x, y, z)]; }
    float& at(int x, int y, int z) noexcept { return data_[grid_.index(x, y, z)]; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    bool operator==(const Volume3D&) const = default;

private:
    Grid grid_;
    std::vector<float> data_;
};

enum class Tissue : int { WM = 0, GM = 1, Other = 2 };

/// Probabilistic WM/GM/other masks forming a partition of unity per voxel.
class TissueMasks {
public:
    static constexpr double kPartitionTolerance = 1e-6;

    TissueMasks() = default;
    /// All voxels set to pure "other".
    explicit TissueMasks(const Grid& grid);
    /// Validates range [0,1] and partition of unity; throws DataError otherwise.
    TissueMasks(const Grid& grid, std::array<std::vector<float>, 3> channels);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const float> channel(Tissue t) const noexcept { return channels_[int(t)]; }
    std::span<float> channel(Tissue t) noexcept { return channels_[int(t)]; }
    float at(Tissue t, std::size_t i) const noexcept { return channels_[int(t)][i]; }

    /// Re-checks the invariants after in-place edits through channel().
    void validate() const;

    bool operator==(const TissueMasks&) const = default;

private:
    Grid grid_;
    std::array<std::vector<float>, 3> channels_;
};

struct VolumeStats {
    double min = 0, max = 0, mean = 0, std = 0;
    double foreground_fraction = 0;
};

inline constexpr double kDefaultBackgroundEpsilon = 1e-6;

/// Summary statistics. Reductions run in double, in voxel order.
VolumeStats stats(const Volume3D& v, double background_epsilon = kDefaultBackgroundEpsilon);

/// Throws NumericError if any value is NaN or infinite.
void require_finite(std::span<const float> values, const char* what);

// --- IQTV binary format ---------------------------------------------------

inline constexpr std::size_t kIqtvHeaderBytes = 64;
inline constexpr std::uint32_t kIqtvVersion = 1;

using AnyVolume = std::variant<Volume3D, TissueMasks>;

/// Reads an IQTV file; one channel yields a Volume3D, three yield TissueMasks.
AnyVolume load_volume(const std::filesystem::path& path);
Volume3D load_scalar_volume(const std::filesystem::path& path);
TissueMasks load_masks(const std::filesystem::path& path);

void save_volume(const Volume3D& v, const std::filesystem::path& path);
void save_volume(const TissueMasks& m, const std::filesystem::path& path);

/// In-memory encoding used by save_volume; exposed for golden-byte tests.
std::vector<std::byte> encode_iqtv(const Grid& grid, std::span<const std::span<const float>> channels);
AnyVolume decode_iqtv(std::span<const std::byte> bytes);

}  // namespace iqt
