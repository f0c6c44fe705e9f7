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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "iqt/bspline.hpp"
#include "iqt/decimation.hpp"
#include "iqt/error.hpp"
#include "iqt/phantom.hpp"
#include "oracles.hpp"

using namespace iqt;

namespace {

Volume3D ramp_z(int nx, int ny, int nz, double sz = 1.0) {
    Volume3D v(Grid{nx, ny, nz, 1.0, 1.0, sz});
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) v.at(x, y, z) = float(z);
    return v;
}

// Cylinder along z: masks are z-invariant, so they stay binary after decimation.
Phantom z_invariant_phantom(int n, int nz) {
    Grid g{n, n, nz, 0.7, 0.7, 0.7};
    std::array<std::vector<float>, 3> ch{std::vector<float>(g.size()), std::vector<float>(g.size()), std::vector<float>(g.size())};
    std::vector<float> img(g.size());
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double r = std::hypot(x - n / 2.0 + 0.5, y - n / 2.0 + 0.5);
                const std::size_t i = g.index(x, y, z);
                if (r < n / 5.0) {
                    ch[0][i] = 1;
                    img[i] = 0.82f;
                } else if (r < n / 2.5) {
                    ch[1][i] = 1;
                    img[i] = 0.64f;
                } else {
                    ch[2][i] = 1;
                    img[i] = r < n / 2.2 ? 0.3f : 0.0f;
                }
            }
    return {Volume3D(g, img), TissueMasks(g, ch)};
}

}  // namespace

TEST(Kernel, NormalisedAndSymmetric) {
    for (double sigma : {0.3, 1.18916, 2.5})
        for (double spacing : {0.7, 1.0}) {
            const auto w = gaussian_kernel_1d(sigma, spacing, 3.0);
            double s = 0;
            for (double x : w) s += x;
            EXPECT_NEAR(s, 1.0, 1e-12);
            ASSERT_EQ(w.size() % 2, 1u);
            for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(w[i], w[w.size() - 1 - i]);
            EXPECT_EQ(int(w.size()) / 2, int(std::ceil(3.0 * sigma / spacing)));
            for (int k : {2, 4, 8}) {
                const auto sw = slab_kernel(sigma, spacing, 3.0, k);
                double ss = 0;
                for (double x : sw) ss += x;
                EXPECT_NEAR(ss, 1.0, 1e-12);
                for (std::size_t i = 0; i < sw.size(); ++i) EXPECT_EQ(sw[i], sw[sw.size() - 1 - i]);
            }
        }
}

TEST(Kernel, SliceProfileSigma) {
    const double sigma = slice_profile_sigma(4, 0.7, FwhmMode{});
    EXPECT_NEAR(sigma, 4 * 0.7 / std::sqrt(8 * std::numbers::ln2), 1e-15);
    EXPECT_NEAR(sigma, 1.189051, 1e-6);
    const double thick = slice_profile_sigma(4, 0.7, FwhmMode{FwhmMode::Kind::Thickness, 0.75});
    EXPECT_NEAR(thick * std::sqrt(8 * std::numbers::ln2), 2.1, 1e-12);
}

TEST(Kernel, NarrowSigmaIsNearDelta) {
    const auto w = gaussian_kernel_1d(0.01, 1.0, 3.0);
    EXPECT_GT(w[w.size() / 2], 0.999);
}

TEST(Kernel, RejectsNonPositiveSigma) {
    EXPECT_THROW(gaussian_kernel_1d(0.0, 1.0, 3.0), ConfigError);
    EXPECT_THROW(gaussian_kernel_1d(-1.0, 1.0, 3.0), ConfigError);
}

TEST(Downsample, ConstantPreservedInInterior) {
    Volume3D v(Grid{3, 3, 64, 0.7, 0.7, 0.7}, std::vector<float>(3 * 3 * 64, 2.5f));
    const auto w = slab_kernel(slice_profile_sigma(4, 0.7, {}), 0.7, 3.0, 4);
    const auto d = downsample_z(v, 4, w);
    ASSERT_EQ(d.nz(), 16);
    EXPECT_FLOAT_EQ(float(d.grid().sz), float(2.8));
    for (int z = 2; z < 14; ++z) EXPECT_NEAR(d.at(1, 1, z), 2.5, 1e-6) << z;
}

TEST(Downsample, DeltaKernelSelectsSlices) {
    Volume3D v = ramp_z(2, 2, 4);
    const auto d = downsample_z(v, 2, SlabKernel{1.0});
    ASSERT_EQ(d.nz(), 2);
    // Odd-length kernel centred on floor of the slab centre: slices 0 and 2.
    EXPECT_EQ(d.at(0, 0, 0), 0.0f);
    EXPECT_EQ(d.at(0, 0, 1), 2.0f);
}

TEST(Downsample, RampSampledAtSlabCentres) {
    const Volume3D v = ramp_z(2, 2, 64, 0.7);
    for (int k : {2, 4, 8}) {
        const double sigma = slice_profile_sigma(k, 0.7, {});
        const auto w = slab_kernel(sigma, 0.7, 3.0, k);
        const auto d = downsample_z(v, k, w);
        const int margin = int(w.size()) / k + 1;
        for (int z = margin; z < d.nz() - margin; ++z) EXPECT_NEAR(d.at(0, 0, z), k * z + (k - 1) / 2.0, 1e-4) << "k=" << k;
    }
}

TEST(Downsample, MatchesDirectConvolutionOracle) {
    Volume3D v(Grid{5, 4, 32, 0.7, 0.7, 0.7});
    Rng rng(3);
    std::uniform_real_distribution<float> u(0, 1);
    for (float& x : v.data()) x = u(rng);
    for (int k : {2, 4, 8}) {
        const double sigma = slice_profile_sigma(k, 0.7, {});
        const auto w = slab_kernel(sigma, 0.7, 3.0, k);
        const auto lib = downsample_z(v, k, w);
        const auto ref = oracle::downsample_z(v, k, sigma, int(w.size()));
        for (std::size_t i = 0; i < lib.size(); ++i) ASSERT_NEAR(lib.data()[i], ref.data()[i], 2e-6) << "k=" << k << " i=" << i;
    }
}

TEST(Downsample, RejectsIndivisibleDepth) {
    EXPECT_THROW(downsample_z(ramp_z(2, 2, 10), 4, SlabKernel{1.0}), DataError);
}

TEST(Masks, ConstantChannelsUnchanged) {
    const Grid g{2, 2, 16, 1, 1, 1};
    std::array<std::vector<float>, 3> ch{std::vector<float>(g.size(), 0.25f), std::vector<float>(g.size(), 0.5f),
                                         std::vector<float>(g.size(), 0.25f)};
    const auto w = slab_kernel(1.0, 1.0, 3.0, 4);
    const auto d = downsample_masks(TissueMasks(g, ch), 4, w);
    for (std::size_t i = 0; i < d.grid().size(); ++i) {
        EXPECT_NEAR(d.at(Tissue::WM, i), 0.25, 1e-6);
        EXPECT_NEAR(d.at(Tissue::GM, i), 0.5, 1e-6);
    }
}

TEST(Masks, PartitionAfterResampling) {
    PhantomConfig c;
    c.dims = {32, 32, 32};
    const auto p = generate_phantom(c);
    const auto d = downsample_masks(p.masks, 4, slab_kernel(slice_profile_sigma(4, 0.7, {}), 0.7, 3.0, 4));
    for (std::size_t i = 0; i < d.grid().size(); ++i)
        ASSERT_NEAR(double(d.at(Tissue::WM, i)) + d.at(Tissue::GM, i) + d.at(Tissue::Other, i), 1.0, 1e-6);
}

TEST(Masks, HardBoundaryGetsKernelMass) {
    // WM for z < 6, GM above; output slice 1 is centred at z = 5.5 (k=4 -> 4*1+1.5).
    const Grid g{1, 1, 16, 1, 1, 1};
    std::array<std::vector<float>, 3> ch{std::vector<float>(16, 0.0f), std::vector<float>(16, 0.0f), std::vector<float>(16, 0.0f)};
    for (int z = 0; z < 16; ++z) (z < 6 ? ch[0] : ch[1])[std::size_t(z)] = 1.0f;
    const auto w = slab_kernel(1.2, 1.0, 3.0, 4);
    const auto d = downsample_masks(TissueMasks(g, ch), 4, w);
    // Taps start at 4 + floor((4 - L)/2); the WM share is the mass on slices < 6.
    const int L = int(w.size());
    const int j0 = 4 + int(std::floor((4.0 - L) / 2));
    double wm_mass = 0, total = 0;
    for (int t = 0; t < L; ++t) {
        const int j = j0 + t;
        if (j < 0 || j >= 16) continue;
        total += w[std::size_t(t)];
        if (j < 6) wm_mass += w[std::size_t(t)];
    }
    EXPECT_NEAR(d.at(Tissue::WM, 1), wm_mass / total, 1e-6);
    EXPECT_NEAR(d.at(Tissue::WM, 1), 0.5, 1e-6);  // symmetric about the boundary
}

TEST(Snr, UniformIntensityBinaryMask) {
    const Grid g{2, 2, 2};
    std::array<std::vector<float>, 3> ch{std::vector<float>(8, 0.0f), std::vector<float>(8, 0.0f), std::vector<float>(8, 0.0f)};
    for (int i = 0; i < 4; ++i) ch[0][std::size_t(i)] = 1;
    for (int i = 4; i < 8; ++i) ch[1][std::size_t(i)] = 1;
    const TissueMasks m(g, ch);
    Volume3D v(g, std::vector<float>(8, 0.82f));
    const auto s = compute_snr(v, m, 0.01);
    EXPECT_NEAR(s.snr_wm, double(0.82f) / 0.01, 1e-9);
    EXPECT_NEAR(s.snr_wm, 82.0, 1e-5);
    Volume3D v2(g, std::vector<float>(8, 1.64f));
    EXPECT_NEAR(compute_snr(v2, m, 0.01).snr_wm, 2 * s.snr_wm, 1e-9);
    EXPECT_NEAR(compute_snr(v2, m, 0.01).snr_gm, 2 * s.snr_gm, 1e-9);
}

TEST(Snr, EmptyTissueAndZeroSigma) {
    const Grid g{2, 1, 1};
    const TissueMasks only_other(g);
    const Volume3D v(g);
    try {
        compute_snr(v, only_other, 0.01);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("WM"), std::string::npos);
    }
    std::array<std::vector<float>, 3> ch{std::vector<float>{1, 0}, std::vector<float>{0, 1}, std::vector<float>{0, 0}};
    EXPECT_THROW(compute_snr(v, TissueMasks(g, ch), 0.0), NumericError);
}

TEST(Prior, DegenerateCovarianceReturnsMean) {
    SnrPrior p;
    p.sigma = {{{0, 0}, {0, 0}}};
    Rng rng(1);
    const auto s = sample_snr(p, rng);
    EXPECT_EQ(s.snr_wm, 64.50);
    EXPECT_EQ(s.snr_gm, 54.14);
}

TEST(Prior, DeterministicPerSeed) {
    Rng a(77), b(77);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_snr(SnrPrior{}, a), sample_snr(SnrPrior{}, b));
}

TEST(Prior, MonteCarloMoments) {
    Rng rng(2024);
    const int n = 100000;
    double m0 = 0, m1 = 0, s00 = 0, s01 = 0, s11 = 0;
    std::vector<SnrSample> draws(n);
    for (auto& d : draws) d = sample_snr(SnrPrior{}, rng);
    for (const auto& d : draws) m0 += d.snr_wm, m1 += d.snr_gm;
    m0 /= n, m1 /= n;
    for (const auto& d : draws) {
        s00 += (d.snr_wm - m0) * (d.snr_wm - m0);
        s01 += (d.snr_wm - m0) * (d.snr_gm - m1);
        s11 += (d.snr_gm - m1) * (d.snr_gm - m1);
    }
    s00 /= n - 1, s01 /= n - 1, s11 /= n - 1;
    EXPECT_NEAR(m0, 64.50, 0.5);
    EXPECT_NEAR(m1, 54.14, 0.5);
    EXPECT_NEAR(s00, 78.47, 0.05 * 78.47);
    EXPECT_NEAR(s01, 71.50, 0.05 * 71.50);
    EXPECT_NEAR(s11, 73.91, 0.05 * 73.91);
}

TEST(Prior, RejectsInvalidCovariance) {
    SnrPrior p;
    p.sigma = {{{1, 2}, {2, 1}}};  // eigenvalues 3 and -1
    Rng rng(1);
    EXPECT_THROW(sample_snr(p, rng), NumericError);
    p.sigma = {{{1, 0.5}, {0.4, 1}}};
    EXPECT_THROW(p.validate(), NumericError);
}

TEST(Prior, RetryLimit) {
    SnrPrior p;
    p.mu = {-100, -100};
    p.sigma = {{{1e-6, 0}, {0, 1e-6}}};
    Rng rng(1);
    EXPECT_THROW(sample_snr(p, rng), NumericError);
}

TEST(Contrast, IdentityRatios) {
    PhantomConfig c;
    c.dims = {24, 24, 24};
    const auto p = generate_phantom(c);
    const SnrSample s{70, 50};
    EXPECT_EQ(contrast_transfer(p.image, p.masks, s, s), p.image);
}

TEST(Contrast, HalvingRatios) {
    const auto p = z_invariant_phantom(20, 4);
    const auto out = contrast_transfer(p.image, p.masks, {61, 53}, {122, 106});
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (p.masks.at(Tissue::Other, i) == 1.0f)
            ASSERT_EQ(out.data()[i], p.image.data()[i]);
        else
            ASSERT_EQ(out.data()[i], float(0.5 * p.image.data()[i]));
    }
}

TEST(Contrast, RejectsNonPositiveHighSnr) {
    const auto p = z_invariant_phantom(20, 4);
    EXPECT_THROW(contrast_transfer(p.image, p.masks, {61, 53}, {0, 106}), NumericError);
}

TEST(Noise, ZeroSigmaIsIdentity) {
    const auto v = ramp_z(4, 4, 4);
    Rng rng(1);
    EXPECT_EQ(add_noise(v, 0.0, rng), v);
}

TEST(Noise, SampleStd) {
    Volume3D v(Grid{100, 100, 100});
    Rng rng(5);
    const auto n = add_noise(v, 0.1, rng);
    const auto s = stats(n, -1);
    EXPECT_GE(s.std, 0.0995);
    EXPECT_LE(s.std, 0.1005);
}

TEST(Noise, SeedsDiffer) {
    Volume3D v(Grid{8, 8, 8});
    Rng a(1), b(2);
    EXPECT_FALSE(add_noise(v, 0.1, a) == add_noise(v, 0.1, b));
}

TEST(Simulate, ShapeContract) {
    PhantomConfig c;
    c.dims = {32, 32, 32};
    const auto p = generate_phantom(c);
    Rng rng(1);
    const auto r = simulate_low_field(p.image, p.masks, SimConfig{}, FixedSnr{{61, 53}}, rng);
    EXPECT_EQ(r.noisy.nz(), 8);
    EXPECT_EQ(r.noisy.nx(), 32);
    EXPECT_FLOAT_EQ(float(r.noisy.grid().sz), float(4 * 0.7));
    EXPECT_EQ(r.snr_low, (SnrSample{61, 53}));
}

TEST(Simulate, ClosedLoopBinaryMasks) {
    const auto p = z_invariant_phantom(48, 32);
    SimConfig cfg;
    Rng rng(9);
    const auto r = simulate_low_field(p.image, p.masks, cfg, FixedSnr{{61, 53}}, rng);
    const auto clean = compute_snr(r.clean, r.masks, cfg.sigma_y);
    EXPECT_NEAR(clean.snr_wm, 61, 61 * 1e-5);
    EXPECT_NEAR(clean.snr_gm, 53, 53 * 1e-5);
    const auto noisy = compute_snr(r.noisy, r.masks, cfg.sigma_y);
    EXPECT_NEAR(noisy.snr_wm, 61, 61 * 0.05);
    EXPECT_NEAR(noisy.snr_gm, 53, 53 * 0.05);
}

TEST(Simulate, WmClosedLoopOnPhantom) {
    PhantomConfig c;
    c.dims = {64, 64, 64};
    const auto p = generate_phantom(c);
    SimConfig cfg;
    Rng rng(4);
    const auto r = simulate_low_field(p.image, p.masks, cfg, FixedSnr{{61, 53}}, rng);
    EXPECT_NEAR(compute_snr(r.noisy, r.masks, cfg.sigma_y).snr_wm, 61, 61 * 0.05);
}

TEST(Simulate, ScalingBehaviour) {
    const auto p = z_invariant_phantom(24, 32);
    std::vector<float> scaled(p.image.data().begin(), p.image.data().end());
    for (float& x : scaled) x *= 2.0f;
    const auto w = slab_kernel(slice_profile_sigma(4, 0.7, {}), 0.7, 3.0, 4);
    const auto m = downsample_masks(p.masks, 4, w);
    const auto y1 = downsample_z(p.image, 4, w);
    const auto y2 = downsample_z(Volume3D(p.image.grid(), scaled), 4, w);
    const SnrSample low{61, 53};
    const auto x1 = contrast_transfer(y1, m, low, compute_snr(y1, m, 0.001));
    const auto x2 = contrast_transfer(y2, m, low, compute_snr(y2, m, 0.001));
    // With snr_high re-measured the ratios absorb the scale, so pure-tissue voxels
    // are unchanged while "other" voxels keep the factor.
    const auto other = m.channel(Tissue::Other);
    int pure_tissue = 0, pure_other = 0;
    for (std::size_t i = 0; i < x1.size(); ++i) {
        if (other[i] == 0.0f) {
            ++pure_tissue;
            ASSERT_NEAR(x2.data()[i], x1.data()[i], 1e-5 * std::abs(x1.data()[i]) + 1e-7);
        } else if (other[i] == 1.0f && x1.data()[i] > 0.1f) {
            ++pure_other;
            ASSERT_NEAR(x2.data()[i], 2 * x1.data()[i], 1e-7);
        }
    }
    EXPECT_GT(pure_tissue, 0);
    EXPECT_GT(pure_other, 0);
    // Scaling the low-field targets as well scales the output linearly everywhere.
    const auto x3 = contrast_transfer(y2, m, SnrSample{2 * low.snr_wm, 2 * low.snr_gm}, compute_snr(y2, m, 0.001));
    for (std::size_t i = 0; i < x1.size(); ++i) ASSERT_NEAR(x3.data()[i], 2 * x1.data()[i], 1e-5 * std::abs(x1.data()[i]) + 1e-7);
}

TEST(Simulate, SampledModeGivesDistinctRealizations) {
    PhantomConfig c;
    c.dims = {24, 24, 32};
    const auto p = generate_phantom(c);
    Rng rng(8);
    const auto a = simulate_low_field(p.image, p.masks, SimConfig{}, SampledSnr{}, rng);
    const auto b = simulate_low_field(p.image, p.masks, SimConfig{}, SampledSnr{}, rng);
    EXPECT_FALSE(a.noisy == b.noisy);
    EXPECT_FALSE(a.snr_low == b.snr_low);
}

TEST(Simulate, Deterministic) {
    PhantomConfig c;
    c.dims = {24, 24, 32};
    const auto p = generate_phantom(c);
    Rng a(8), b(8);
    EXPECT_EQ(simulate_low_field(p.image, p.masks, SimConfig{}, SampledSnr{}, a).noisy,
              simulate_low_field(p.image, p.masks, SimConfig{}, SampledSnr{}, b).noisy);
}

TEST(Simulate, ConfigValidation) {
    SimConfig c;
    c.k = 3;
    EXPECT_THROW(c.validate(), ConfigError);
    c = SimConfig{};
    c.sigma_x = 0.0001;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
    PhantomConfig c;
    c.dims = {24, 20, 32};
    const auto p = generate_phantom(c);
    auto run = [&](const char* threads) {
        ::setenv("IQT_THREADS", threads, 1);
        Rng rng(12);
        auto r = simulate_low_field(p.image, p.masks, SimConfig{}, SampledSnr{}, rng);
        auto up = upsample_z_bspline(r.noisy, 4);
        ::unsetenv("IQT_THREADS");
        return std::pair{std::move(r.noisy), std::move(up)};
    };
    const auto one = run("1");
    const auto three = run("3");
    EXPECT_TRUE(one.first == three.first);
    EXPECT_TRUE(one.second == three.second);
}
