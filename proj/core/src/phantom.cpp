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

#include "iqt/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iqt/error.hpp"
#include "iqt/rng.hpp"

namespace iqt {

namespace {

// Logistic step with compact support: exactly 1 for d <= -8s, exactly 0 for d >= 8s.
constexpr double kSupport = 8.0;

double soft_inside(double signed_distance_mm, double softness_mm) {
    const double t = signed_distance_mm / softness_mm;
    if (t <= -kSupport) return 1.0;
    if (t >= kSupport) return 0.0;
    const double lo = 1.0 / (1.0 + std::exp(kSupport));
    const double hi = 1.0 / (1.0 + std::exp(-kSupport));
    const double p = 1.0 / (1.0 + std::exp(t));
    return std::clamp((p - lo) / (hi - lo), 0.0, 1.0);
}

struct Ellipsoid {
    std::array<double, 3> center{};  // mm
    std::array<double, 3> axes{};    // semi-axes, mm

    // First-order signed distance (mm): (r - 1) / |grad r|, negative inside.
    double signed_distance(double x, double y, double z) const {
        const double u = (x - center[0]) / axes[0];
        const double v = (y - center[1]) / axes[1];
        const double w = (z - center[2]) / axes[2];
        const double r = std::sqrt(u * u + v * v + w * w);
        if (r < 1e-12) return -std::min({axes[0], axes[1], axes[2]});
        const double gx = u / axes[0], gy = v / axes[1], gz = w / axes[2];
        const double g = std::sqrt(gx * gx + gy * gy + gz * gz) / r;
        return (r - 1.0) / g;
    }
};

}  // namespace

void PhantomConfig::validate() const {
    for (int d : dims)
        if (d < 16) throw ConfigError("phantom dims must be >= 16 per axis");
    if (!(spacing_mm > 0)) throw ConfigError("phantom spacing must be positive");
    if (!(gm_intensity > 0) || !(wm_intensity > gm_intensity))
        throw ConfigError("phantom intensities must satisfy wm > gm > 0");
    if (!(boundary_softness_mm > 0)) throw ConfigError("boundary softness must be positive");
    if (lesion_count < 0) throw ConfigError("lesion count must be non-negative");
    for (int a = 0; a < 3; ++a) {
        if (!(brain_extent[a] > 0 && brain_extent[a] < 1)) throw ConfigError("brain_extent must be in (0,1)");
        if (!(wm_fraction[a] > 0 && wm_fraction[a] < 1)) throw ConfigError("wm_fraction must be in (0,1)");
        // Both shells must span at least two voxels along every axis.
        const double outer_vox = brain_extent[a] * 0.5 * dims[a];
        const double wm_vox = outer_vox * wm_fraction[a];
        if (wm_vox < 2.0 || outer_vox - wm_vox < 2.0) {
            std::ostringstream os;
            os << "dims too small to contain both shells along axis " << a;
            throw ConfigError(os.str());
        }
    }
}

Phantom generate_phantom(const PhantomConfig& cfg) {
    cfg.validate();
    const Grid grid{cfg.dims[0], cfg.dims[1], cfg.dims[2], cfg.spacing_mm, cfg.spacing_mm, cfg.spacing_mm};
    const double h = cfg.spacing_mm;

    Ellipsoid brain, wm;
    for (int a = 0; a < 3; ++a) {
        brain.center[a] = wm.center[a] = 0.5 * (cfg.dims[a] - 1) * h;
        brain.axes[a] = cfg.brain_extent[a] * 0.5 * cfg.dims[a] * h;
        wm.axes[a] = brain.axes[a] * cfg.wm_fraction[a];
    }

    // Lesions sit on the WM surface, a random direction each.
    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> radius_frac(0.06, 0.12);
    std::vector<Ellipsoid> lesions;
    for (int i = 0; i < cfg.lesion_count; ++i) {
        double d[3];
        double n2 = 0;
        do {
            for (double& c : d) c = unit(rng);
            n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        } while (n2 < 1e-6 || n2 > 1.0);
        const double n = std::sqrt(n2);
        Ellipsoid e;
        const double r = radius_frac(rng) * std::min({brain.axes[0], brain.axes[1], brain.axes[2]});
        for (int a = 0; a < 3; ++a) {
            e.center[a] = wm.center[a] + wm.axes[a] * d[a] / n;
            e.axes[a] = r;
        }
        lesions.push_back(e);
    }

    const std::size_t n = grid.size();
    std::vector<float> mwm(n), mgm(n), mot(n), img(n);
    const double s = cfg.boundary_softness_mm;
    for (int z = 0; z < grid.nz; ++z) {
        for (int y = 0; y < grid.ny; ++y) {
            for (int x = 0; x < grid.nx; ++x) {
                const double px = x * h, py = y * h, pz = z * h;
                const double p_brain = soft_inside(brain.signed_distance(px, py, pz), s);
                double p_wm = soft_inside(wm.signed_distance(px, py, pz), s) * p_brain;
                double p_gm = p_brain - p_wm;
                // Lesions pull WM/GM membership toward an even split.
                for (const auto& e : lesions) {
                    const double w = soft_inside(e.signed_distance(px, py, pz), s);
                    if (w > 0) {
                        p_wm = (1 - w) * p_wm + w * 0.5 * p_brain;
                        p_gm = p_brain - p_wm;
                    }
                }
                const std::size_t i = grid.index(x, y, z);
                mwm[i] = float(p_wm);
                mgm[i] = float(p_gm);
                // Derived from the float channels so the stored masks sum to 1.
                mot[i] = float(1.0 - double(mwm[i]) - double(mgm[i]));
                if (mot[i] < 0.0f) mot[i] = 0.0f;
                img[i] = float(cfg.wm_intensity * double(mwm[i]) + cfg.gm_intensity * double(mgm[i]));
            }
        }
    }
    return Phantom{Volume3D(grid, std::move(img)), TissueMasks(grid, {std::move(mwm), std::move(mgm), std::move(mot)})};
}

PhantomConfig cohort_subject_config(const PhantomConfig& base, std::uint64_t seed, int index) {
    PhantomConfig cfg = base;
    cfg.seed = derive_seed(seed, std::uint64_t(index));
    Rng rng(cfg.seed ^ 0xC0FFEEull);
    std::uniform_real_distribution<double> axis_jitter(0.92, 1.05);
    std::uniform_real_distribution<double> wm_jitter(0.93, 1.07);
    std::uniform_real_distribution<double> intensity_jitter(0.95, 1.05);
    for (int a = 0; a < 3; ++a) {
        cfg.brain_extent[a] = std::min(0.95, base.brain_extent[a] * axis_jitter(rng));
        cfg.wm_fraction[a] = std::min(0.9, base.wm_fraction[a] * wm_jitter(rng));
    }
    cfg.wm_intensity = base.wm_intensity * intensity_jitter(rng);
    cfg.gm_intensity = base.gm_intensity * intensity_jitter(rng);
    if (cfg.gm_intensity >= cfg.wm_intensity) cfg.gm_intensity = 0.95 * cfg.wm_intensity;
    return cfg;
}

std::vector<Phantom> generate_cohort(int n_subjects, const PhantomConfig& base, std::uint64_t seed) {
    if (n_subjects < 1) throw ConfigError("cohort needs at least one subject");
    std::vector<Phantom> out;
    out.reserve(std::size_t(n_subjects));
    for (int i = 0; i < n_subjects; ++i) out.push_back(generate_phantom(cohort_subject_config(base, seed, i)));
    return out;
}

}  // namespace iqt
