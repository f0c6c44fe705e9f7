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

#include "iqt/bspline.hpp"

#include <cmath>

#include "iqt/error.hpp"
#include "iqt/parallel.hpp"

namespace iqt {

namespace {

const double kPole = std::sqrt(3.0) - 2.0;

int mirror_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

}  // namespace

double cubic_bspline(double t) noexcept {
    const double a = std::abs(t);
    if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    if (a < 2.0) {
        const double b = 2.0 - a;
        return b * b * b / 6.0;
    }
    return 0.0;
}

SplineCoefficients bspline_prefilter_1d(std::span<const double> samples) {
    const int n = int(samples.size());
    if (n < 2) throw DataError("B-spline prefilter needs at least two samples");
    const double z = kPole;
    const double gain = (1.0 - z) * (1.0 - 1.0 / z);
    std::vector<double> c(samples.begin(), samples.end());
    for (double& x : c) x *= gain;

    // Causal initialisation for the mirrored signal: sum over one period.
    {
        double zn = z;
        const double z2n = std::pow(z, double(n - 1));
        double iz = 1.0 / z;
        double z2 = z2n;
        double sum = c[0] + z2n * c[std::size_t(n - 1)];
        z2 *= z2 * iz;
        for (int k = 1; k <= n - 2; ++k) {
            sum += (zn + z2) * c[std::size_t(k)];
            zn *= z;
            z2 *= iz;
        }
        c[0] = sum / (1.0 - zn * zn);
    }
    for (int k = 1; k < n; ++k) c[std::size_t(k)] += z * c[std::size_t(k - 1)];

    // Anticausal initialisation.
    c[std::size_t(n - 1)] = (z / (z * z - 1.0)) * (z * c[std::size_t(n - 2)] + c[std::size_t(n - 1)]);
    for (int k = n - 2; k >= 0; --k) c[std::size_t(k)] = z * (c[std::size_t(k + 1)] - c[std::size_t(k)]);
    return SplineCoefficients{std::move(c)};
}

double bspline_evaluate(const SplineCoefficients& coeffs, double u) noexcept {
    const int n = int(coeffs.c.size());
    const int base = int(std::floor(u));
    double sum = 0.0;
    for (int i = base - 1; i <= base + 2; ++i) sum += coeffs.c[std::size_t(mirror_index(i, n))] * cubic_bspline(u - i);
    return sum;
}

Volume3D upsample_z_bspline(const Volume3D& v, int k) {
    if (k < 2) throw ConfigError("B-spline upsampling factor must be >= 2");
    const Grid& g = v.grid();
    if (g.nz < 2) throw DataError("B-spline upsampling needs at least two slices");
    Grid out_grid = g;
    out_grid.nz = g.nz * k;
    out_grid.sz = g.sz / k;

    const std::size_t plane = std::size_t(g.nx) * std::size_t(g.ny);
    std::vector<float> out(out_grid.size());
    const auto in = v.data();
    // Precompute basis weights per fine slice; each touches four coarse knots.
    struct Taps {
        int idx[4];
        double w[4];
    };
    std::vector<Taps> taps(std::size_t(out_grid.nz));
    for (int j = 0; j < out_grid.nz; ++j) {
        const double u = (double(j) - 0.5 * double(k - 1)) / double(k);
        const int base = int(std::floor(u));
        for (int t = 0; t < 4; ++t) {
            const int i = base - 1 + t;
            taps[std::size_t(j)].idx[t] = mirror_index(i, g.nz);
            taps[std::size_t(j)].w[t] = cubic_bspline(u - i);
        }
    }

    parallel_for(plane, [&](std::size_t b, std::size_t e) {
        std::vector<double> column(std::size_t(g.nz));
        for (std::size_t p = b; p < e; ++p) {
            for (int z = 0; z < g.nz; ++z) column[std::size_t(z)] = in[std::size_t(z) * plane + p];
            const SplineCoefficients c = bspline_prefilter_1d(column);
            for (int j = 0; j < out_grid.nz; ++j) {
                const Taps& t = taps[std::size_t(j)];
                double s = 0;
                for (int q = 0; q < 4; ++q) s += c.c[std::size_t(t.idx[q])] * t.w[q];
                out[std::size_t(j) * plane + p] = float(s);
            }
        }
    }, 256);
    return Volume3D(out_grid, std::move(out));
}

}  // namespace iqt
