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

#include <span>
#include <vector>

#include "iqt/volume.hpp"

namespace iqt {

/// Interpolating cubic B-spline coefficients for one sampled line.
struct SplineCoefficients {
    std::vector<double> c;
};

/// Cubic B-spline basis B3(t), support (-2, 2).
double cubic_bspline(double t) noexcept;

/// Recursive (causal + anticausal) prefilter with pole sqrt(3) - 2 and
/// mirror (whole-sample symmetric) boundaries. Requires at least 2 samples.
SplineCoefficients bspline_prefilter_1d(std::span<const double> samples);

/// Evaluates sum_i c_i B3(u - i) with mirrored coefficient indices.
double bspline_evaluate(const SplineCoefficients& coeffs, double u) noexcept;

/// Interpolates every (x, y) column along z by a factor k. Fine slice j
/// samples coarse coordinate (j - (k-1)/2) / k, the inverse of the slab
/// centring used by downsample_z.
Volume3D upsample_z_bspline(const Volume3D& v, int k);

}  // namespace iqt
