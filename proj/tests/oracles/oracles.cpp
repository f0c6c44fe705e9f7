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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace oracle {

Tensor5 conv3d(const Tensor5& in, const Tensor5& w, const Tensor5& bias) {
    const Shape5 s = in.shape();
    const Shape5 k = w.shape();
    Tensor5 out(Shape5{s.n, k.n, s.x, s.y, s.z});
    const int rx = k.x / 2, ry = k.y / 2, rz = k.z / 2;
    for (int n = 0; n < s.n; ++n)
        for (int o = 0; o < k.n; ++o)
            for (int z = 0; z < s.z; ++z)
                for (int y = 0; y < s.y; ++y)
                    for (int x = 0; x < s.x; ++x) {
                        double acc = bias.data()[std::size_t(o)];
                        for (int i = 0; i < k.c; ++i)
                            for (int dz = 0; dz < k.z; ++dz)
                                for (int dy = 0; dy < k.y; ++dy)
                                    for (int dx = 0; dx < k.x; ++dx) {
                                        const int xi = x + dx - rx, yi = y + dy - ry, zi = z + dz - rz;
                                        if (xi < 0 || yi < 0 || zi < 0 || xi >= s.x || yi >= s.y || zi >= s.z) continue;
                                        acc += w.at(o, i, dx, dy, dz) * in.at(n, i, xi, yi, zi);
                                    }
                        out.at(n, o, x, y, z) = acc;
                    }
    return out;
}

Tensor5 strided_conv3d(const Tensor5& in, const Tensor5& w) {
    const Shape5 s = in.shape();
    const Shape5 k = w.shape();
    Tensor5 out(Shape5{s.n, k.n, s.x / k.x, s.y / k.y, s.z / k.z});
    for (int n = 0; n < s.n; ++n)
        for (int z = 0; z < s.z; ++z)
            for (int y = 0; y < s.y; ++y)
                for (int x = 0; x < s.x; ++x)
                    for (int o = 0; o < k.c; ++o)
                        for (int i = 0; i < k.n; ++i)
                            out.at(n, i, x / k.x, y / k.y, z / k.z) += w.at(i, o, x % k.x, y % k.y, z % k.z) * in.at(n, o, x, y, z);
    return out;
}

Tensor5 maxpool3d(const Tensor5& in, std::array<int, 3> w) {
    const Shape5 s = in.shape();
    Tensor5 out(Shape5{s.n, s.c, s.x / w[0], s.y / w[1], s.z / w[2]}, -INFINITY);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int z = 0; z < s.z; ++z)
                for (int y = 0; y < s.y; ++y)
                    for (int x = 0; x < s.x; ++x) {
                        double& m = out.at(n, c, x / w[0], y / w[1], z / w[2]);
                        m = std::max(m, in.at(n, c, x, y, z));
                    }
    return out;
}

double brute_mssim(const iqt::Volume3D& ref, const iqt::Volume3D& test, const iqt::SsimParams& p) {
    const int t = p.taps;
    std::vector<double> g(static_cast<std::size_t>(t));
    double gs = 0;
    for (int i = 0; i < t; ++i) {
        const double d = i - t / 2;
        g[std::size_t(i)] = std::exp(-d * d / (2 * p.gaussian_sigma * p.gaussian_sigma));
        gs += g[std::size_t(i)];
    }
    double lo = ref.data()[0], hi = ref.data()[0];
    for (float v : ref.data()) lo = std::min<double>(lo, v), hi = std::max<double>(hi, v);
    const double L = p.dynamic_range ? *p.dynamic_range : (hi > lo ? hi - lo : 1.0);
    const double c1 = (p.k1 * L) * (p.k1 * L), c2 = (p.k2 * L) * (p.k2 * L);
    double total = 0;
    int count = 0;
    for (int z = 0; z + t <= ref.nz(); ++z)
        for (int y = 0; y + t <= ref.ny(); ++y)
            for (int x = 0; x + t <= ref.nx(); ++x) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int c = 0; c < t; ++c)
                    for (int b = 0; b < t; ++b)
                        for (int a = 0; a < t; ++a) {
                            const double w = g[std::size_t(a)] * g[std::size_t(b)] * g[std::size_t(c)] / (gs * gs * gs);
                            const double u = ref.at(x + a, y + b, z + c), v = test.at(x + a, y + b, z + c);
                            mx += w * u;
                            my += w * v;
                            sxx += w * u * u;
                            syy += w * v * v;
                            sxy += w * u * v;
                        }
                const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
                total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
    return total / count;
}

double wilcoxon_enumeration_p(std::span<const double> a, std::span<const double> b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    const int n = int(d.size());
    // Average ranks of |d| by counting: rank = #smaller + (#equal + 1) / 2.
    std::vector<double> rank(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int smaller = 0, equal = 0;
        for (int j = 0; j < n; ++j) {
            if (std::abs(d[std::size_t(j)]) < std::abs(d[std::size_t(i)])) ++smaller;
            if (std::abs(d[std::size_t(j)]) == std::abs(d[std::size_t(i)])) ++equal;
        }
        rank[std::size_t(i)] = smaller + (equal + 1) / 2.0;
    }
    double total = 0, observed = 0;
    for (int i = 0; i < n; ++i) {
        total += rank[std::size_t(i)];
        if (d[std::size_t(i)] > 0) observed += rank[std::size_t(i)];
    }
    const double centre = total / 2;
    const double dev = std::abs(observed - centre);
    std::uint64_t extreme = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
        double w = 0;
        for (int i = 0; i < n; ++i)
            if (mask >> i & 1) w += rank[std::size_t(i)];
        if (std::abs(w - centre) >= dev - 1e-9) ++extreme;
    }
    return double(extreme) / double(std::uint64_t(1) << n);
}

std::vector<double> spline_coefficients_dense(std::span<const double> f) {
    const int n = int(f.size());
    std::vector<std::vector<double>> a(std::size_t(n), std::vector<double>(std::size_t(n) + 1, 0.0));
    const auto mirror = [n](int i) {
        if (n == 1) return 0;
        const int period = 2 * (n - 1);
        i = ((i % period) + period) % period;
        return i < n ? i : period - i;
    };
    for (int i = 0; i < n; ++i) {
        a[std::size_t(i)][std::size_t(mirror(i - 1))] += 1.0 / 6;
        a[std::size_t(i)][std::size_t(i)] += 4.0 / 6;
        a[std::size_t(i)][std::size_t(mirror(i + 1))] += 1.0 / 6;
        a[std::size_t(i)][std::size_t(n)] = f[std::size_t(i)];
    }
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[std::size_t(r)][std::size_t(c)]) > std::abs(a[std::size_t(piv)][std::size_t(c)])) piv = r;
        std::swap(a[std::size_t(c)], a[std::size_t(piv)]);
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f2 = a[std::size_t(r)][std::size_t(c)] / a[std::size_t(c)][std::size_t(c)];
            for (int q = c; q <= n; ++q) a[std::size_t(r)][std::size_t(q)] -= f2 * a[std::size_t(c)][std::size_t(q)];
        }
    }
    std::vector<double> c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) c[std::size_t(i)] = a[std::size_t(i)][std::size_t(n)] / a[std::size_t(i)][std::size_t(i)];
    return c;
}

iqt::Volume3D downsample_z(const iqt::Volume3D& v, int k, double sigma_mm, int taps) {
    iqt::Grid g = v.grid();
    const double sp = g.sz;
    g.nz /= k;
    g.sz *= k;
    iqt::Volume3D out(g);
    for (int vz = 0; vz < g.nz; ++vz) {
        const double c = k * vz + (k - 1) / 2.0;
        // The `taps` integer slices closest to c.
        const double first = std::ceil(c - taps / 2.0 + 1e-9);
        std::vector<int> idx;
        std::vector<double> w;
        double sum = 0;
        for (int t = 0; t < taps; ++t) {
            const int j = int(first) + t;
            const double d = (j - c) * sp;
            idx.push_back(j);
            w.push_back(std::exp(-d * d / (2 * sigma_mm * sigma_mm)));
            sum += w.back();
        }
        for (int y = 0; y < g.ny; ++y)
            for (int x = 0; x < g.nx; ++x) {
                double acc = 0;
                for (std::size_t t = 0; t < idx.size(); ++t)
                    if (idx[t] >= 0 && idx[t] < v.nz()) acc += w[t] / sum * v.at(x, y, idx[t]);
                out.at(x, y, vz) = float(acc);
            }
    }
    return out;
}

int brute_patch_count(const iqt::Volume3D& ref, const iqt::PatchSpec& spec) {
    int kept = 0;
    const auto& s = spec.low_size;
    for (int z = 0; z + s[2] <= ref.nz(); ++z)
        for (int y = 0; y + s[1] <= ref.ny(); ++y)
            for (int x = 0; x + s[0] <= ref.nx(); ++x) {
                if (x % spec.strides[0] || y % spec.strides[1] || z % spec.strides[2]) continue;
                long background = 0;
                for (int c = 0; c < s[2]; ++c)
                    for (int b = 0; b < s[1]; ++b)
                        for (int a = 0; a < s[0]; ++a)
                            if (std::abs(ref.at(x + a, y + b, z + c)) <= spec.background_epsilon) ++background;
                if (double(background) < spec.background_threshold * double(s[0]) * s[1] * s[2]) ++kept;
            }
    return kept;
}

std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f();
        x[i] = keep - h;
        const double down = f();
        x[i] = keep;
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle
