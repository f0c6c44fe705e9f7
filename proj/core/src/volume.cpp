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

#include "iqt/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "iqt/error.hpp"
#include "iqt/tensor.hpp"

namespace iqt {

void Grid::validate() const {
    if (nx <= 0 || ny <= 0 || nz <= 0) {
        std::ostringstream os;
        os << "non-positive dimensions " << nx << "x" << ny << "x" << nz;
        throw FormatError(FormatError::Kind::BadDims, os.str());
    }
    if (!(sx > 0) || !(sy > 0) || !(sz > 0) || !std::isfinite(sx) || !std::isfinite(sy) || !std::isfinite(sz)) {
        std::ostringstream os;
        os << "non-positive spacing " << sx << "," << sy << "," << sz;
        throw FormatError(FormatError::Kind::BadDims, os.str());
    }
}

Grid Grid::canonical() const noexcept {
    Grid g = *this;
    g.sx = nn::round_to_f32(sx);
    g.sy = nn::round_to_f32(sy);
    g.sz = nn::round_to_f32(sz);
    return g;
}

void require_finite(std::span<const float> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            std::ostringstream os;
            os << what << ": non-finite value at index " << i;
            throw NumericError(os.str());
        }
    }
}

Volume3D::Volume3D(const Grid& grid) : grid_(grid.canonical()) {
    grid_.validate();
    data_.assign(grid_.size(), 0.0f);
}

Volume3D::Volume3D(const Grid& grid, std::vector<float> data) : grid_(grid.canonical()), data_(std::move(data)) {
    grid_.validate();
    if (data_.size() != grid_.size())
        throw DataError("volume data length " + std::to_string(data_.size()) + " does not match grid size " +
                        std::to_string(grid_.size()));
    require_finite(data_, "volume");
}

TissueMasks::TissueMasks(const Grid& grid) : grid_(grid.canonical()) {
    grid_.validate();
    for (auto& c : channels_) c.assign(grid_.size(), 0.0f);
    std::fill(channels_[int(Tissue::Other)].begin(), channels_[int(Tissue::Other)].end(), 1.0f);
}

TissueMasks::TissueMasks(const Grid& grid, std::array<std::vector<float>, 3> channels)
    : grid_(grid.canonical()), channels_(std::move(channels)) {
    grid_.validate();
    validate();
}

void TissueMasks::validate() const {
    const std::size_t n = grid_.size();
    for (const auto& c : channels_) {
        if (c.size() != n) throw DataError("mask channel length does not match grid size");
        require_finite(c, "mask");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& c : channels_) {
            if (c[i] < 0.0f || c[i] > 1.0f) {
                throw DataError("mask value outside [0,1] at voxel " + std::to_string(i));
            }
            sum += c[i];
        }
        if (std::abs(sum - 1.0) > kPartitionTolerance)
            throw DataError("masks do not partition unity at voxel " + std::to_string(i));
    }
}

VolumeStats stats(const Volume3D& v, double background_epsilon) {
    VolumeStats s;
    const auto d = v.data();
    if (d.empty()) return s;
    auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    s.min = *lo;
    s.max = *hi;
    double sum = 0.0;
    std::size_t fg = 0;
    for (float x : d) {
        sum += x;
        if (x > background_epsilon) ++fg;
    }
    s.mean = sum / double(d.size());
    double ss = 0.0;
    for (float x : d) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / double(d.size()));
    // Rounding can push the mean a hair outside [min, max] on constant data.
    s.mean = std::clamp(s.mean, s.min, s.max);
    s.foreground_fraction = double(fg) / double(d.size());
    return s;
}

// --- IQTV ------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'I', 'Q', 'T', 'V'};

void put_u32(std::vector<std::byte>& out, std::size_t at, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out[at + b] = std::byte((v >> (8 * b)) & 0xFFu);
}

void put_f32(std::vector<std::byte>& out, std::size_t at, float f) { put_u32(out, at, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::span<const std::byte> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t(std::to_integer<unsigned>(in[at + b])) << (8 * b);
    return v;
}

float get_f32(std::span<const std::byte> in, std::size_t at) { return std::bit_cast<float>(get_u32(in, at)); }

}  // namespace

std::vector<std::byte> encode_iqtv(const Grid& grid, std::span<const std::span<const float>> channels) {
    grid.validate();
    if (channels.size() != 1 && channels.size() != 3)
        throw FormatError(FormatError::Kind::BadChannels, "channel count must be 1 or 3");
    const std::size_t n = grid.size();
    std::vector<std::byte> out(kIqtvHeaderBytes + n * channels.size() * 4, std::byte{0});
    std::memcpy(out.data(), kMagic, 4);
    put_u32(out, 4, kIqtvVersion);
    put_u32(out, 8, std::uint32_t(grid.nx));
    put_u32(out, 12, std::uint32_t(grid.ny));
    put_u32(out, 16, std::uint32_t(grid.nz));
    put_f32(out, 20, float(grid.sx));
    put_f32(out, 24, float(grid.sy));
    put_f32(out, 28, float(grid.sz));
    put_u32(out, 32, std::uint32_t(channels.size()));
    std::size_t at = kIqtvHeaderBytes;
    for (const auto& c : channels) {
        if (c.size() != n) throw DataError("channel length does not match grid size");
        for (float f : c) {
            put_f32(out, at, f);
            at += 4;
        }
    }
    return out;
}

AnyVolume decode_iqtv(std::span<const std::byte> bytes) {
    if (bytes.size() < kIqtvHeaderBytes)
        throw FormatError(FormatError::Kind::Truncated, "file shorter than the 64-byte IQTV header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(FormatError::Kind::BadMagic, "bad magic, expected IQTV");
    if (get_u32(bytes, 4) != kIqtvVersion)
        throw FormatError(FormatError::Kind::BadVersion, "unsupported IQTV version " + std::to_string(get_u32(bytes, 4)));

    const std::uint32_t nx = get_u32(bytes, 8), ny = get_u32(bytes, 12), nz = get_u32(bytes, 16);
    if (nx == 0 || ny == 0 || nz == 0 || nx > 1u << 16 || ny > 1u << 16 || nz > 1u << 16)
        throw FormatError(FormatError::Kind::BadDims, "invalid dimensions in IQTV header");
    Grid grid{int(nx), int(ny), int(nz), get_f32(bytes, 20), get_f32(bytes, 24), get_f32(bytes, 28)};
    grid.validate();

    const std::uint32_t nc = get_u32(bytes, 32);
    if (nc != 1 && nc != 3)
        throw FormatError(FormatError::Kind::BadChannels, "channel count " + std::to_string(nc) + " not in {1,3}");

    const std::size_t n = grid.size();
    if (bytes.size() < kIqtvHeaderBytes + n * nc * 4)
        throw FormatError(FormatError::Kind::Truncated, "payload truncated: expected " + std::to_string(n * nc * 4) +
                                                              " bytes, found " +
                                                              std::to_string(bytes.size() - kIqtvHeaderBytes));

    auto read_channel = [&](std::size_t c) {
        std::vector<float> out(n);
        std::size_t at = kIqtvHeaderBytes + c * n * 4;
        for (std::size_t i = 0; i < n; ++i, at += 4) out[i] = get_f32(bytes, at);
        for (float f : out)
            if (!std::isfinite(f)) throw FormatError(FormatError::Kind::NonFinite, "non-finite value in payload");
        return out;
    };

    if (nc == 1) return Volume3D(grid, read_channel(0));
    return TissueMasks(grid, {read_channel(0), read_channel(1), read_channel(2)});
}

AnyVolume load_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Unreadable, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto bytes = std::as_bytes(std::span<const char>(raw));
    try {
        return decode_iqtv(bytes);
    } catch (const FormatError& e) {
        throw FormatError(e.kind(), path.string() + ": " + e.what());
    }
}

Volume3D load_scalar_volume(const std::filesystem::path& path) {
    auto any = load_volume(path);
    if (auto* v = std::get_if<Volume3D>(&any)) return std::move(*v);
    throw FormatError(FormatError::Kind::BadChannels, path.string() + ": expected a single-channel volume");
}

TissueMasks load_masks(const std::filesystem::path& path) {
    auto any = load_volume(path);
    if (auto* m = std::get_if<TissueMasks>(&any)) return std::move(*m);
    throw FormatError(FormatError::Kind::BadChannels, path.string() + ": expected a 3-channel mask file");
}

namespace {

void write_bytes(const std::vector<std::byte>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Unwritable, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw FormatError(FormatError::Kind::Unwritable, "write failed for " + path.string());
}

}  // namespace

void save_volume(const Volume3D& v, const std::filesystem::path& path) {
    std::span<const float> ch[1] = {v.data()};
    write_bytes(encode_iqtv(v.grid(), ch), path);
}

void save_volume(const TissueMasks& m, const std::filesystem::path& path) {
    std::span<const float> ch[3] = {m.channel(Tissue::WM), m.channel(Tissue::GM), m.channel(Tissue::Other)};
    write_bytes(encode_iqtv(m.grid(), ch), path);
}

}  // namespace iqt
