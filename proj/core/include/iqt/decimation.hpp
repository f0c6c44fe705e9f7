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
#include <variant>
#include <vector>

#include "iqt/rng.hpp"
#include "iqt/volume.hpp"

namespace iqt {

/// Prior over low-field (WM, GM) SNR: N(mu, sigma).
struct SnrPrior {
    std::array<double, 2> mu{64.50, 54.14};
    std::array<std::array<double, 2>, 2> sigma{{{78.47, 71.50}, {71.50, 73.91}}};

    /// Symmetric within 1e-9 and positive semi-definite; throws NumericError otherwise.
    void validate() const;
};

struct SnrSample {
    double snr_wm = 0;
    double snr_gm = 0;
    bool operator==(const SnrSample&) const = default;
};

/// How the Gaussian slice profile width is chosen.
struct FwhmMode {
    enum class Kind { Spacing, Thickness };
    Kind kind = Kind::Spacing;
    /// Only used for Thickness: FWHM = ratio * k * e_z.
    double ratio = 1.0;
};

struct SimConfig {
    int k = 4;
    double sigma_x = 0.01;
    double sigma_y = 0.001;
    FwhmMode fwhm{};
    double truncation = 3.0;
    std::uint64_t seed = 0;

    /// sigma_x > sigma_y >= 0 and k in {2,4,8}; throws ConfigError otherwise.
    void validate() const;
};

/// A z-filter aligned for stride-k decimation. Weight t is applied to input
/// slice floor(c - (size-1)/2) + t, where c = k*v' + (k-1)/2 is the centre of
/// output slice v' in input index space.
using SlabKernel = std::vector<double>;

/// Gaussian sigma (mm) of the slice profile: FWHM / sqrt(8 ln 2).
double slice_profile_sigma(int k, double e_z, const FwhmMode& mode);

/// Samples h_sigma at integer multiples of `spacing`, radius ceil(truncation*sigma/spacing),
/// renormalised to sum to one. Odd length, symmetric.
std::vector<double> gaussian_kernel_1d(double sigma, double spacing, double truncation);

/// Like gaussian_kernel_1d but sampled at offsets centred on the slab centre of
/// stride-k decimation: half-integer offsets for even k, integer for odd k.
SlabKernel slab_kernel(double sigma, double spacing, double truncation, int k);

/// Filters along z and keeps every k-th slab centre. Zero padding in z.
Volume3D downsample_z(const Volume3D& v, int k, const SlabKernel& kernel);

/// Masks resampled with the image filter, then renormalised to a partition of unity.
TissueMasks downsample_masks(const TissueMasks& m, int k, const SlabKernel& kernel);

/// Mask-weighted mean intensity over sigma_y, per tissue (WM, GM).
SnrSample compute_snr(const Volume3D& v, const TissueMasks& m, double sigma_y);

/// Cholesky draw from the prior; redraws while either component is <= 1 (100 tries).
SnrSample sample_snr(const SnrPrior& prior, Rng& rng);

/// Scales WM/GM by snr_low/snr_high; "other" is left unchanged.
Volume3D contrast_transfer(const Volume3D& v, const TissueMasks& m, const SnrSample& snr_low, const SnrSample& snr_high);

/// Adds i.i.d. N(0, sigma_x^2) noise. One key is drawn from `rng`; each voxel's
/// draw depends only on that key and its index.
Volume3D add_noise(const Volume3D& v, double sigma_x, Rng& rng);

struct FixedSnr {
    SnrSample snr;
};
struct SampledSnr {
    SnrPrior prior;
};
using SnrMode = std::variant<FixedSnr, SampledSnr>;

struct SimulationResult {
    Volume3D noisy;           // X_hat_eps
    Volume3D clean;           // X_hat, before noise
    TissueMasks masks;        // low-resolution masks
    SnrSample snr_high;       // measured on the decimated input
    SnrSample snr_low;        // fixed or drawn target
};

/// Full decimation simulator: decimate, rescale tissue contrast, add noise.
SimulationResult simulate_low_field(const Volume3D& y, const TissueMasks& m, const SimConfig& cfg, const SnrMode& mode,
                                    Rng& rng);

}  // namespace iqt
