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

#include "iqt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iqt/error.hpp"

namespace iqt {

double psnr(const Volume3D& reference, const Volume3D& test, std::optional<double> peak) {
    if (!reference.grid().same_shape(test.grid())) throw DataError("psnr: volume dimensions differ");
    const auto r = reference.data();
    const auto t = test.data();
    double mse = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = double(r[i]) - double(t[i]);
        mse += d * d;
    }
    mse /= double(r.size());
    const double p = peak ? *peak : double(*std::max_element(r.begin(), r.end()));
    if (!(p > 0)) throw NumericError("psnr: peak must be positive");
    if (mse == 0) return kPsnrIdentical;
    return 10.0 * std::log10(p * p / mse);
}

void SsimParams::validate() const {
    if (taps < 1 || taps % 2 == 0) throw ConfigError("SSIM window taps must be odd and positive");
    if (!(gaussian_sigma > 0)) throw ConfigError("SSIM Gaussian sigma must be positive");
    if (!(k1 > 0) || !(k2 > 0)) throw ConfigError("SSIM constants must be positive");
    if (dynamic_range && !(*dynamic_range > 0)) throw ConfigError("SSIM dynamic range must be positive");
}

std::vector<double> ssim_window(const SsimParams& p) {
    p.validate();
    const int r = p.taps / 2;
    std::vector<double> w(std::size_t(p.taps));
    double sum = 0;
    for (int i = -r; i <= r; ++i) sum += w[std::size_t(i + r)] = std::exp(-double(i * i) / (2 * p.gaussian_sigma * p.gaussian_sigma));
    for (double& x : w) x /= sum;
    return w;
}

namespace {

struct Field {
    int nx, ny, nz;
    std::vector<double> v;
    double& at(int x, int y, int z) { return v[(std::size_t(z) * std::size_t(ny) + std::size_t(y)) * std::size_t(nx) + std::size_t(x)]; }
    double at(int x, int y, int z) const {
        return v[(std::size_t(z) * std::size_t(ny) + std::size_t(y)) * std::size_t(nx) + std::size_t(x)];
    }
};

// Valid-mode correlation with `w` along one axis.
Field filter_axis(const Field& in, const std::vector<double>& w, int axis) {
    const int t = int(w.size());
    Field out{in.nx - (axis == 0 ? t - 1 : 0), in.ny - (axis == 1 ? t - 1 : 0), in.nz - (axis == 2 ? t - 1 : 0), {}};
    out.v.assign(std::size_t(out.nx) * std::size_t(out.ny) * std::size_t(out.nz), 0.0);
    for (int z = 0; z < out.nz; ++z)
        for (int y = 0; y < out.ny; ++y)
            for (int x = 0; x < out.nx; ++x) {
                double s = 0;
                for (int q = 0; q < t; ++q) {
                    const int xi = x + (axis == 0 ? q : 0), yi = y + (axis == 1 ? q : 0), zi = z + (axis == 2 ? q : 0);
                    s += w[std::size_t(q)] * in.at(xi, yi, zi);
                }
                out.at(x, y, z) = s;
            }
    return out;
}

Field smooth(Field f, const std::vector<double>& w) {
    for (int a = 0; a < 3; ++a) f = filter_axis(f, w, a);
    return f;
}

}  // namespace

std::vector<double> ssim_map(const Volume3D& reference, const Volume3D& test, const SsimParams& params) {
    if (!reference.grid().same_shape(test.grid())) throw DataError("ssim: volume dimensions differ");
    const auto w = ssim_window(params);
    const Grid& g = reference.grid();
    if (g.nx < params.taps || g.ny < params.taps || g.nz < params.taps) throw DataError("ssim: volume smaller than window");

    double range = 1.0;
    if (params.dynamic_range) {
        range = *params.dynamic_range;
    } else {
        const auto [lo, hi] = std::minmax_element(reference.data().begin(), reference.data().end());
        if (*hi > *lo) range = double(*hi) - double(*lo);
    }
    const double c1 = (params.k1 * range) * (params.k1 * range);
    const double c2 = (params.k2 * range) * (params.k2 * range);

    const std::size_t n = g.size();
    Field x{g.nx, g.ny, g.nz, std::vector<double>(n)}, y = x, xx = x, yy = x, xy = x;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = reference.data()[i], b = test.data()[i];
        x.v[i] = a;
        y.v[i] = b;
        xx.v[i] = a * a;
        yy.v[i] = b * b;
        xy.v[i] = a * b;
    }
    const Field mx = smooth(std::move(x), w), my = smooth(std::move(y), w);
    const Field sxx = smooth(std::move(xx), w), syy = smooth(std::move(yy), w), sxy = smooth(std::move(xy), w);

    std::vector<double> out(mx.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double ux = mx.v[i], uy = my.v[i];
        const double vx = sxx.v[i] - ux * ux, vy = syy.v[i] - uy * uy, cxy = sxy.v[i] - ux * uy;
        out[i] = ((2 * ux * uy + c1) * (2 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    return out;
}

double mssim(const Volume3D& reference, const Volume3D& test, const SsimParams& params) {
    const auto m = ssim_map(reference, test, params);
    return std::accumulate(m.begin(), m.end(), 0.0) / double(m.size());
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("wilcoxon: sample lengths differ");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;  // also covers equal infinities
        const double diff = a[i] - b[i];
        if (!std::isfinite(diff)) throw NumericError("wilcoxon: non-finite difference");
        d.push_back(diff);
    }
    if (d.empty()) throw DataError("wilcoxon: no nonzero differences");
    const int n = int(d.size());

    // Doubled average ranks keep tied ranks integral.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(d[std::size_t(i)]) < std::abs(d[std::size_t(j)]); });
    std::vector<long> rank2(static_cast<std::size_t>(n));
    double tie_term = 0;
    for (int i = 0; i < n;) {
        int j = i;
        while (j + 1 < n && std::abs(d[std::size_t(order[std::size_t(j + 1)])]) == std::abs(d[std::size_t(order[std::size_t(i)])])) ++j;
        const long r2 = long(i + 1) + long(j + 1);  // 2 * average of ranks i+1..j+1
        for (int q = i; q <= j; ++q) rank2[std::size_t(order[std::size_t(q)])] = r2;
        const double t = double(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    long wp2 = 0, total2 = 0;
    for (int i = 0; i < n; ++i) {
        total2 += rank2[std::size_t(i)];
        if (d[std::size_t(i)] > 0) wp2 += rank2[std::size_t(i)];
    }
    WilcoxonResult res;
    res.n = n;
    res.w_plus = 0.5 * double(wp2);
    res.w_minus = 0.5 * double(total2 - wp2);
    res.statistic = std::min(res.w_plus, res.w_minus);
    const long w2 = std::min(wp2, total2 - wp2);

    if (n <= kWilcoxonExactLimit) {
        // counts[s] = number of sign patterns whose doubled W+ equals s.
        std::vector<double> counts(std::size_t(total2 + 1), 0.0);
        counts[0] = 1;
        long reach = 0;
        for (int i = 0; i < n; ++i) {
            const long r = rank2[std::size_t(i)];
            for (long s = reach; s >= 0; --s)
                if (counts[std::size_t(s)] != 0) counts[std::size_t(s + r)] += counts[std::size_t(s)];
            reach += r;
        }
        double tail = 0;
        for (long s = 0; s <= w2; ++s) tail += counts[std::size_t(s)];
        res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, n));
        res.exact = true;
    } else {
        const double nn = n;
        const double mean = nn * (nn + 1) / 4.0;
        const double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_term / 48.0;
        const double z = std::max(0.0, std::abs(res.w_plus - mean) - 0.5) / std::sqrt(var);
        res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
        res.exact = false;
    }
    return res;
}

}  // namespace iqt
