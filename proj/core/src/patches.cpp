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

#include "iqt/patches.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "iqt/error.hpp"

namespace iqt {

PatchSpec PatchSpec::for_factor(int k) {
    if (k < 1 || 32 % k != 0 || 16 % k != 0) throw ConfigError("patch factor k must divide 16");
    PatchSpec s;
    s.k = k;
    s.low_size = {32, 32, 32 / k};
    s.strides = {8, 16, 16 / k};
    return s;
}

void PatchSpec::validate() const {
    if (k < 1) throw ConfigError("patch factor k must be positive");
    for (int a = 0; a < 3; ++a) {
        if (low_size[a] < 1) throw ConfigError("patch sizes must be positive");
        if (strides[a] < 1) throw ConfigError("patch strides must be positive");
    }
    if (!(background_threshold > 0 && background_threshold <= 1)) throw ConfigError("background threshold must be in (0,1]");
    if (!(background_epsilon >= 0)) throw ConfigError("background epsilon must be non-negative");
}

namespace {

std::vector<int> axis_positions(int dim, int size, int stride, bool snap_end) {
    std::vector<int> pos;
    for (int p = 0; p + size <= dim; p += stride) pos.push_back(p);
    if (snap_end && !pos.empty() && pos.back() + size < dim) pos.push_back(dim - size);
    return pos;
}

std::vector<Index3> lattice(const Index3& dims, const PatchSpec& spec, bool snap_end) {
    spec.validate();
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < spec.low_size[a]) {
            std::ostringstream os;
            os << "volume (" << dims[0] << "," << dims[1] << "," << dims[2] << ") is smaller than one patch ("
               << spec.low_size[0] << "," << spec.low_size[1] << "," << spec.low_size[2] << ")";
            throw DataError(os.str());
        }
    }
    const auto px = axis_positions(dims[0], spec.low_size[0], spec.strides[0], snap_end);
    const auto py = axis_positions(dims[1], spec.low_size[1], spec.strides[1], snap_end);
    const auto pz = axis_positions(dims[2], spec.low_size[2], spec.strides[2], snap_end);
    std::vector<Index3> out;
    out.reserve(px.size() * py.size() * pz.size());
    for (int z : pz)
        for (int y : py)
            for (int x : px) out.push_back({x, y, z});
    return out;
}

Index3 dims_of(const Grid& g) { return {g.nx, g.ny, g.nz}; }

}  // namespace

std::vector<Index3> patch_grid(const Index3& lo_dims, const PatchSpec& spec) { return lattice(lo_dims, spec, false); }

std::vector<Index3> covering_patch_grid(const Index3& lo_dims, const PatchSpec& spec) {
    return lattice(lo_dims, spec, true);
}

std::vector<float> crop(const Volume3D& v, const Index3& origin, const Index3& size) {
    const Grid& g = v.grid();
    if (origin[0] < 0 || origin[1] < 0 || origin[2] < 0 || origin[0] + size[0] > g.nx || origin[1] + size[1] > g.ny ||
        origin[2] + size[2] > g.nz)
        throw DataError("crop window outside volume");
    std::vector<float> out(std::size_t(size[0]) * size[1] * size[2]);
    std::size_t o = 0;
    for (int z = 0; z < size[2]; ++z)
        for (int y = 0; y < size[1]; ++y) {
            const float* row = &v.data()[g.index(origin[0], origin[1] + y, origin[2] + z)];
            std::copy(row, row + size[0], out.begin() + std::ptrdiff_t(o));
            o += std::size_t(size[0]);
        }
    return out;
}

bool keep_patch(const Volume3D& reference, const Index3& origin, const PatchSpec& spec) {
    const auto values = crop(reference, origin, spec.low_size);
    std::size_t background = 0;
    for (float v : values)
        if (std::abs(double(v)) <= spec.background_epsilon) ++background;
    return double(background) < spec.background_threshold * double(values.size());
}

PatchLibrary extract_pairs(const Volume3D& lo, const Volume3D& hi, const PatchSpec& spec,
                           const Volume3D* background_reference, int subject_id, int augmentation_id) {
    spec.validate();
    const Grid& lg = lo.grid();
    const Grid& hg = hi.grid();
    if (hg.nx != lg.nx || hg.ny != lg.ny || hg.nz != spec.k * lg.nz) {
        std::ostringstream os;
        os << "high-field dims (" << hg.nx << "," << hg.ny << "," << hg.nz << ") do not match low-field dims ("
           << lg.nx << "," << lg.ny << "," << lg.nz << ") at k=" << spec.k;
        throw DataError(os.str());
    }
    const Volume3D& ref = background_reference ? *background_reference : lo;
    if (!ref.grid().same_shape(lg)) throw DataError("background reference grid differs from low-field grid");

    PatchLibrary lib;
    lib.spec = spec;
    for (const Index3& o : patch_grid(dims_of(lg), spec)) {
        if (!keep_patch(ref, o, spec)) continue;
        PatchPair p;
        p.low = crop(lo, o, spec.low_size);
        p.high = crop(hi, {o[0], o[1], spec.k * o[2]}, spec.high_size());
        p.origin = o;
        p.subject_id = subject_id;
        p.augmentation_id = augmentation_id;
        lib.pairs.push_back(std::move(p));
    }
    lib.kept_positions = int(lib.pairs.size());
    lib.n_aug = 1;
    return lib;
}

PatchLibrary augment_library(const Volume3D& hi, const TissueMasks& m, const SimConfig& cfg, const SnrPrior& prior,
                             int n_aug, const PatchSpec& spec, Rng& rng, int subject_id) {
    if (n_aug < 1) throw ConfigError("augmentation factor must be >= 1");
    if (cfg.k != spec.k) throw ConfigError("simulator and patch spec disagree on k");
    PatchLibrary lib;
    lib.spec = spec;
    lib.n_aug = n_aug;
    std::vector<Index3> kept;
    for (int j = 0; j < n_aug; ++j) {
        const SimulationResult sim = simulate_low_field(hi, m, cfg, SampledSnr{prior}, rng);
        if (j == 0) {
            for (const Index3& o : patch_grid(dims_of(sim.clean.grid()), spec))
                if (keep_patch(sim.clean, o, spec)) kept.push_back(o);
            lib.kept_positions = int(kept.size());
        }
        for (const Index3& o : kept) {
            PatchPair p;
            p.low = crop(sim.noisy, o, spec.low_size);
            p.high = crop(hi, {o[0], o[1], spec.k * o[2]}, spec.high_size());
            p.origin = o;
            p.subject_id = subject_id;
            p.augmentation_id = j;
            lib.pairs.push_back(std::move(p));
        }
    }
    return lib;
}

PatchLibrary merge_libraries(std::vector<PatchLibrary> libs) {
    if (libs.empty()) throw DataError("nothing to merge");
    PatchLibrary out;
    out.spec = libs.front().spec;
    out.n_aug = libs.front().n_aug;
    for (auto& l : libs) {
        if (!(l.spec == out.spec)) throw DataError("cannot merge libraries with different patch specs");
        if (l.n_aug != out.n_aug) throw DataError("cannot merge libraries with different augmentation factors");
        out.kept_positions += l.kept_positions;
        std::move(l.pairs.begin(), l.pairs.end(), std::back_inserter(out.pairs));
    }
    return out;
}

PatchLibrary subsample(const PatchLibrary& lib, double fraction, Rng& rng) {
    if (!(fraction > 0 && fraction <= 1)) throw ConfigError("subsample fraction must be in (0,1]");
    const std::size_t n = lib.pairs.size();
    // nearbyint honours the default round-to-nearest-even mode.
    const auto count = std::size_t(std::nearbyint(fraction * double(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates over the first count slots.
    for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    PatchLibrary out;
    out.spec = lib.spec;
    out.kept_positions = lib.kept_positions;
    out.n_aug = lib.n_aug;
    out.pairs.reserve(count);
    for (std::size_t i : idx) out.pairs.push_back(lib.pairs[i]);
    return out;
}

std::vector<int> coverage_counts(const std::vector<PlacedPatch>& patches, const Grid& g) {
    std::vector<int> count(g.size(), 0);
    for (const auto& p : patches) {
        for (int a = 0; a < 3; ++a)
            if (p.origin[a] < 0) throw DataError("patch origin outside volume");
        if (p.origin[0] + p.size[0] > g.nx || p.origin[1] + p.size[1] > g.ny || p.origin[2] + p.size[2] > g.nz)
            throw DataError("patch extends outside volume");
        for (int z = 0; z < p.size[2]; ++z)
            for (int y = 0; y < p.size[1]; ++y)
                for (int x = 0; x < p.size[0]; ++x) ++count[g.index(p.origin[0] + x, p.origin[1] + y, p.origin[2] + z)];
    }
    return count;
}

Volume3D assemble(const std::vector<PlacedPatch>& patches, const Grid& g) {
    g.validate();
    std::vector<double> sum(g.size(), 0.0);
    for (const auto& p : patches) {
        if (p.values.size() != std::size_t(p.size[0]) * p.size[1] * p.size[2])
            throw DataError("patch value count does not match its size");
    }
    const std::vector<int> count = coverage_counts(patches, g);
    // Fixed patch order keeps the floating-point sums reproducible.
    for (const auto& p : patches) {
        std::size_t i = 0;
        for (int z = 0; z < p.size[2]; ++z)
            for (int y = 0; y < p.size[1]; ++y)
                for (int x = 0; x < p.size[0]; ++x)
                    sum[g.index(p.origin[0] + x, p.origin[1] + y, p.origin[2] + z)] += double(p.values[i++]);
    }
    std::vector<float> out(g.size());
    for (int z = 0; z < g.nz; ++z)
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x) {
                const std::size_t i = g.index(x, y, z);
                if (count[i] == 0) {
                    std::ostringstream os;
                    os << "voxel (" << x << "," << y << "," << z << ") is not covered by any patch";
                    throw DataError(os.str());
                }
                out[i] = float(sum[i] / count[i]);
            }
    return Volume3D(g, std::move(out));
}

// --- persistence -------------------------------------------------------------

namespace {

nlohmann::json spec_to_json(const PatchSpec& s) {
    return {{"k", s.k},
            {"low_size", s.low_size},
            {"strides", s.strides},
            {"background_threshold", s.background_threshold},
            {"background_epsilon", s.background_epsilon}};
}

PatchSpec spec_from_json(const nlohmann::json& j) {
    PatchSpec s;
    s.k = j.at("k").get<int>();
    s.low_size = j.at("low_size").get<Index3>();
    s.strides = j.at("strides").get<Index3>();
    s.background_threshold = j.at("background_threshold").get<double>();
    s.background_epsilon = j.at("background_epsilon").get<double>();
    s.validate();
    return s;
}

std::string shard_name(std::size_t shard, const char* kind) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "shard_%04zu.%s.iqtv", shard, kind);
    return buf;
}

}  // namespace

void save_library(const PatchLibrary& lib, const std::filesystem::path& dir, int shard_size,
                  const nlohmann::json& provenance) {
    if (shard_size < 1) throw ConfigError("shard size must be positive");
    std::filesystem::create_directories(dir);
    const PatchSpec& s = lib.spec;
    const Index3 hs = s.high_size();
    nlohmann::json pairs = nlohmann::json::array();
    const std::size_t n = lib.pairs.size();
    const std::size_t shards = (n + std::size_t(shard_size) - 1) / std::size_t(shard_size);
    for (std::size_t sh = 0; sh < shards; ++sh) {
        const std::size_t b = sh * std::size_t(shard_size), e = std::min(n, b + std::size_t(shard_size));
        const int count = int(e - b);
        std::vector<float> lo, hi;
        lo.reserve(s.low_voxels() * std::size_t(count));
        hi.reserve(s.high_voxels() * std::size_t(count));
        for (std::size_t i = b; i < e; ++i) {
            const PatchPair& p = lib.pairs[i];
            if (p.low.size() != s.low_voxels() || p.high.size() != s.high_voxels())
                throw DataError("patch pair does not match the library spec");
            lo.insert(lo.end(), p.low.begin(), p.low.end());
            hi.insert(hi.end(), p.high.begin(), p.high.end());
            pairs.push_back({{"origin", p.origin},
                             {"subject", p.subject_id},
                             {"augmentation", p.augmentation_id},
                             {"shard", sh},
                             {"slot", i - b}});
        }
        save_volume(Volume3D(Grid{s.low_size[0], s.low_size[1], s.low_size[2] * count, 1, 1, 1}, std::move(lo)),
                    dir / shard_name(sh, "lo"));
        save_volume(Volume3D(Grid{hs[0], hs[1], hs[2] * count, 1, 1, 1}, std::move(hi)), dir / shard_name(sh, "hi"));
    }
    nlohmann::json manifest = {{"format", "iqt-patch-library"},
                               {"version", 1},
                               {"spec", spec_to_json(s)},
                               {"kept_positions", lib.kept_positions},
                               {"n_aug", lib.n_aug},
                               {"pair_count", n},
                               {"shard_size", shard_size},
                               {"shard_count", shards},
                               {"pairs", pairs},
                               {"provenance", provenance}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

PatchLibrary load_library(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw DataError("missing patch library manifest in " + dir.string());
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed library manifest: ") + e.what());
    }
    if (m.value("format", "") != "iqt-patch-library") throw DataError("not a patch library manifest");
    PatchLibrary lib;
    lib.spec = spec_from_json(m.at("spec"));
    lib.kept_positions = m.at("kept_positions").get<int>();
    lib.n_aug = m.at("n_aug").get<int>();
    const std::size_t lo_n = lib.spec.low_voxels(), hi_n = lib.spec.high_voxels();
    std::vector<Volume3D> lo_shards, hi_shards;
    const auto shard_count = m.at("shard_count").get<std::size_t>();
    for (std::size_t sh = 0; sh < shard_count; ++sh) {
        lo_shards.push_back(load_scalar_volume(dir / shard_name(sh, "lo")));
        hi_shards.push_back(load_scalar_volume(dir / shard_name(sh, "hi")));
    }
    for (const auto& jp : m.at("pairs")) {
        const auto sh = jp.at("shard").get<std::size_t>();
        const auto slot = jp.at("slot").get<std::size_t>();
        if (sh >= shard_count) throw DataError("pair refers to a missing shard");
        const auto lo = lo_shards[sh].data();
        const auto hi = hi_shards[sh].data();
        if ((slot + 1) * lo_n > lo.size() || (slot + 1) * hi_n > hi.size()) throw DataError("pair slot out of range");
        PatchPair p;
        p.low.assign(lo.begin() + std::ptrdiff_t(slot * lo_n), lo.begin() + std::ptrdiff_t((slot + 1) * lo_n));
        p.high.assign(hi.begin() + std::ptrdiff_t(slot * hi_n), hi.begin() + std::ptrdiff_t((slot + 1) * hi_n));
        p.origin = jp.at("origin").get<Index3>();
        p.subject_id = jp.at("subject").get<int>();
        p.augmentation_id = jp.at("augmentation").get<int>();
        lib.pairs.push_back(std::move(p));
    }
    if (lib.pairs.size() != m.at("pair_count").get<std::size_t>()) throw DataError("pair count mismatch in manifest");
    return lib;
}

}  // namespace iqt
