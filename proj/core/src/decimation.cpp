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

#include "iqt/decimation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "iqt/error.hpp"
#include "iqt/parallel.hpp"

namespace iqt {

namespace {

constexpr int kMaxSnrRedraws = 100;

int floor_div2(int a) { return a >= 0 ? a / 2 : -((-a + 1) / 2); }

void check_k(int k) {
    if (k < 1) throw ConfigError("decimation factor must be positive");
}

}  // namespace

void SnrPrior::validate() const {
    for (double m : mu)
        if (!std::isfinite(m)) throw NumericError("SNR prior mean must be finite");
    const double a = sigma[0][0], b = sigma[0][1], c = sigma[1][0], d = sigma[1][1];
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
        throw NumericError("SNR prior covariance must be finite");
    if (std::abs(b - c) > 1e-9) throw NumericError("SNR prior covariance is not symmetric");
    // Smallest eigenvalue of a symmetric 2x2 matrix.
    const double half_tr = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    if (half_tr - disc < -1e-9) throw NumericError("SNR prior covariance is not positive semi-definite");
}

void SimConfig::validate() const {
    if (k != 2 && k != 4 && k != 8) throw ConfigError("decimation factor k must be 2, 4 or 8");
    if (!(sigma_y >= 0) || !(sigma_x > sigma_y)) throw ConfigError("noise levels must satisfy sigma_x > sigma_y >= 0");
    if (!(truncation > 0)) throw ConfigError("kernel truncation must be positive");
    if (fwhm.kind == FwhmMode::Kind::Thickness && !(fwhm.ratio > 0))
        throw ConfigError("thickness ratio must be positive");
}

double slice_profile_sigma(int k, double e_z, const FwhmMode& mode) {
    const double ratio = mode.kind == FwhmMode::Kind::Thickness ? mode.ratio : 1.0;
    return ratio * double(k) * e_z / std::sqrt(8.0 * std::numbers::ln2);
}

std::vector<double> gaussian_kernel_1d(double sigma, double spacing, double truncation) {
    if (!(sigma > 0)) throw ConfigError("Gaussian sigma must be positive");
    if (!(spacing > 0) || !(truncation > 0)) throw ConfigError("kernel spacing and truncation must be positive");
    const int radius = int(std::ceil(truncation * sigma / spacing));
    std::vector<double> w(std::size_t(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        const double z = i * spacing;
        w[std::size_t(i + radius)] = std::exp(-z * z / (2 * sigma * sigma));
    }
    // Sum the symmetric pairs outward-in so both halves round identically.
    sum = w[std::size_t(radius)];
    for (int i = radius; i >= 1; --i) sum += w[std::size_t(radius - i)] + w[std::size_t(radius + i)];
    for (double& x : w) x /= sum;
    return w;
}

SlabKernel slab_kernel(double sigma, double spacing, double truncation, int k) {
    check_k(k);
    if (k % 2 == 1) return gaussian_kernel_1d(sigma, spacing, truncation);
    if (!(sigma > 0)) throw ConfigError("Gaussian sigma must be positive");
    if (!(spacing > 0) || !(truncation > 0)) throw ConfigError("kernel spacing and truncation must be positive");
    const int half = int(std::ceil(truncation * sigma / spacing + 0.5));
    SlabKernel w(std::size_t(2 * half));
    for (int t = 0; t < 2 * half; ++t) {
        const double z = (t - half + 0.5) * spacing;
        w[std::size_t(t)] = std::exp(-z * z / (2 * sigma * sigma));
    }
    double sum = 0;
    for (int t = 0; t < half; ++t) sum += w[std::size_t(half - 1 - t)] + w[std::size_t(half + t)];
    for (double& x : w) x /= sum;
    return w;
}

Volume3D downsample_z(const Volume3D& v, int k, const SlabKernel& kernel) {
    check_k(k);
    if (kernel.empty()) throw ConfigError("empty kernel");
    const Grid& g = v.grid();
    if (g.nz % k != 0) {
        std::ostringstream os;
        os << "nz=" << g.nz << " is not divisible by k=" << k;
        throw DataError(os.str());
    }
    Grid out_grid = g;
    out_grid.nz = g.nz / k;
    out_grid.sz = g.sz * k;
    std::vector<float> out(out_grid.size());

    const std::size_t plane = std::size_t(g.nx) * std::size_t(g.ny);
    const int taps = int(kernel.size());
    const int phase = floor_div2(k - taps);
    const auto in = v.data();
    parallel_for(std::size_t(out_grid.nz), [&](std::size_t b, std::size_t e) {
        std::vector<double> acc(plane);
        for (std::size_t oz = b; oz < e; ++oz) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const int j0 = k * int(oz) + phase;
            for (int t = 0; t < taps; ++t) {
                const int j = j0 + t;
                if (j < 0 || j >= g.nz) continue;
                const double w = kernel[std::size_t(t)];
                const float* src = in.data() + std::size_t(j) * plane;
                for (std::size_t i = 0; i < plane; ++i) acc[i] += w * double(src[i]);
            }
            float* dst = out.data() + oz * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = float(acc[i]);
        }
    });
    return Volume3D(out_grid, std::move(out));
}

TissueMasks downsample_masks(const TissueMasks& m, int k, const SlabKernel& kernel) {
    const Grid& g = m.grid();
    auto channel_volume = [&](Tissue t) {
        auto c = m.channel(t);
        return downsample_z(Volume3D(g, std::vector<float>(c.begin(), c.end())), k, kernel);
    };
    const Volume3D wm = channel_volume(Tissue::WM);
    const Volume3D gm = channel_volume(Tissue::GM);
    const Volume3D ot = channel_volume(Tissue::Other);
    const Grid& og = wm.grid();
    const std::size_t n = og.size();
    std::array<std::vector<float>, 3> ch{std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::max(0.0f, wm.data()[i]);
        const double b = std::max(0.0f, gm.data()[i]);
        const double c = std::max(0.0f, ot.data()[i]);
        const double s = a + b + c;
        if (s <= 0) {
            ch[2][i] = 1.0f;
            continue;
        }
        ch[0][i] = float(std::min(1.0, a / s));
        ch[1][i] = float(std::min(1.0, b / s));
        ch[2][i] = float(std::max(0.0, 1.0 - double(ch[0][i]) - double(ch[1][i])));
    }
    return TissueMasks(og, std::move(ch));
}

SnrSample compute_snr(const Volume3D& v, const TissueMasks& m, double sigma_y) {
    if (!v.grid().same_shape(m.grid())) throw DataError("compute_snr: volume and mask grids differ");
    if (!(sigma_y > 0)) throw NumericError("compute_snr: sigma_y must be positive");
    auto tissue_snr = [&](Tissue t, const char* name) {
        const auto mask = m.channel(t);
        const auto d = v.data();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            num += double(mask[i]) * double(d[i]);
            den += double(mask[i]);
        }
        if (den <= 0) throw NumericError(std::string("compute_snr: empty tissue ") + name);
        return num / (sigma_y * den);
    };
    return SnrSample{tissue_snr(Tissue::WM, "WM"), tissue_snr(Tissue::GM, "GM")};
}

SnrSample sample_snr(const SnrPrior& prior, Rng& rng) {
    prior.validate();
    const double a = prior.sigma[0][0], b = prior.sigma[1][0], d = prior.sigma[1][1];
    const double l11 = std::sqrt(std::max(0.0, a));
    const double l21 = l11 > 0 ? b / l11 : 0.0;
    const double l22 = std::sqrt(std::max(0.0, d - l21 * l21));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int attempt = 0; attempt < kMaxSnrRedraws; ++attempt) {
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        const SnrSample s{prior.mu[0] + l11 * z1, prior.mu[1] + l21 * z1 + l22 * z2};
        if (s.snr_wm > 1.0 && s.snr_gm > 1.0) return s;
    }
    throw NumericError("sample_snr: no SNR draw above 1 after 100 attempts");
}

Volume3D contrast_transfer(const Volume3D& v, const TissueMasks& m, const SnrSample& snr_low, const SnrSample& snr_high) {
    if (!v.grid().same_shape(m.grid())) throw DataError("contrast_transfer: volume and mask grids differ");
    if (!(snr_high.snr_wm > 0) || !(snr_high.snr_gm > 0))
        throw NumericError("contrast_transfer: high-field SNR must be positive");
    const double l_wm = snr_low.snr_wm / snr_high.snr_wm;
    const double l_gm = snr_low.snr_gm / snr_high.snr_gm;
    const auto in = v.data();
    const auto wm = m.channel(Tissue::WM);
    const auto gm = m.channel(Tissue::GM);
    std::vector<float> out(in.size());
    // sum_j l_j M_j written as 1 + sum (l_j - 1) M_j, using M_other = 1 - M_wm - M_gm.
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double gain = 1.0 + (l_wm - 1.0) * double(wm[i]) + (l_gm - 1.0) * double(gm[i]);
        out[i] = float(gain * double(in[i]));
    }
    return Volume3D(v.grid(), std::move(out));
}

Volume3D add_noise(const Volume3D& v, double sigma_x, Rng& rng) {
    if (!(sigma_x >= 0)) throw ConfigError("noise level must be non-negative");
    const std::uint64_t key = rng();
    if (sigma_x == 0) return v;
    const auto in = v.data();
    std::vector<float> out(in.size());
    parallel_for(in.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out[i] = float(double(in[i]) + sigma_x * counter_normal(key, i));
    }, 1 << 16);
    return Volume3D(v.grid(), std::move(out));
}

SimulationResult simulate_low_field(const Volume3D& y, const TissueMasks& m, const SimConfig& cfg, const SnrMode& mode,
                                    Rng& rng) {
    cfg.validate();
    if (!y.grid().same_shape(m.grid())) throw DataError("simulate_low_field: image and mask grids differ");
    const double sigma = slice_profile_sigma(cfg.k, y.grid().sz, cfg.fwhm);
    const SlabKernel kernel = slab_kernel(sigma, y.grid().sz, cfg.truncation, cfg.k);

    Volume3D y_low = downsample_z(y, cfg.k, kernel);
    TissueMasks m_low = downsample_masks(m, cfg.k, kernel);
    const SnrSample snr_high = compute_snr(y_low, m_low, cfg.sigma_y);
    SnrSample snr_low;
    if (const auto* fixed = std::get_if<FixedSnr>(&mode)) {
        snr_low = fixed->snr;
    } else {
        snr_low = sample_snr(std::get<SampledSnr>(mode).prior, rng);
    }
    Volume3D clean = contrast_transfer(y_low, m_low, snr_low, snr_high);
    Volume3D noisy = add_noise(clean, cfg.sigma_x, rng);
    return SimulationResult{std::move(noisy), std::move(clean), std::move(m_low), snr_high, snr_low};
}

}  // namespace iqt
