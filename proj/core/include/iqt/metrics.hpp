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

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "iqt/volume.hpp"

namespace iqt {

/// Returned by psnr() when the two volumes are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE). `peak` defaults to the reference maximum.
double psnr(const Volume3D& reference, const Volume3D& test, std::optional<double> peak = std::nullopt);

struct SsimParams {
    int taps = 11;
    double gaussian_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    /// Unset means max - min of the reference (1 if that range is zero).
    std::optional<double> dynamic_range;

    void validate() const;
};

/// Normalised 1D Gaussian window used by SSIM.
std::vector<double> ssim_window(const SsimParams& params);

/// Local SSIM over the valid (fully windowed) region, x-fastest, dims reduced by taps-1.
std::vector<double> ssim_map(const Volume3D& reference, const Volume3D& test, const SsimParams& params);

/// Mean of ssim_map.
double mssim(const Volume3D& reference, const Volume3D& test, const SsimParams& params = {});

struct WilcoxonResult {
    double w_plus = 0;
    double w_minus = 0;
    double statistic = 0;  // min(W+, W-)
    double p_value = 1;    // two-tailed
    int n = 0;             // non-zero differences
    bool exact = true;
};

/// Two-tailed Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; ties get average ranks. Exact null distribution for n <= 20,
/// normal approximation with tie and continuity correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

inline constexpr int kWilcoxonExactLimit = 20;

}  // namespace iqt
