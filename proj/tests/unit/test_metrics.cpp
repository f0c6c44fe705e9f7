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
#include <random>

#include "iqt/error.hpp"
#include "iqt/metrics.hpp"
#include "oracles.hpp"

using namespace iqt;

namespace {

Volume3D random_volume(int n, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    Volume3D v(Grid{n, n, n});
    for (float& x : v.data()) x = u(rng);
    return v;
}

Volume3D perturbed(const Volume3D& v, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> d(0.0f, float(sigma));
    Volume3D out = v;
    for (float& x : out.data()) x += d(rng);
    return out;
}

}  // namespace

TEST(Psnr, IdenticalIsInfinite) {
    const auto v = random_volume(4, 1);
    EXPECT_EQ(psnr(v, v), kPsnrIdentical);
}

TEST(Psnr, KnownOffset) {
    Volume3D a(Grid{4, 4, 4}), b(Grid{4, 4, 4});
    for (float& x : a.data()) x = 1.0f;
    for (float& x : b.data()) x = 0.9f;
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
    EXPECT_NEAR(psnr(a, b, 2.0), 20.0 + 20 * std::log10(2.0), 1e-5);
}

TEST(Psnr, Errors) {
    EXPECT_THROW(psnr(Volume3D(Grid{2, 2, 2}), Volume3D(Grid{2, 2, 3})), DataError);
    EXPECT_THROW(psnr(Volume3D(Grid{2, 2, 2}), Volume3D(Grid{2, 2, 2})), NumericError);
}

TEST(Ssim, IdenticalIsOne) {
    const auto v = random_volume(16, 2);
    EXPECT_NEAR(mssim(v, v), 1.0, 1e-12);
}

TEST(Ssim, MatchesFullWindowOracle) {
    const auto ref = random_volume(16, 3);
    const auto test = perturbed(ref, 0.1, 4);
    for (SsimParams p : {SsimParams{}, SsimParams{7, 1.0, 0.01, 0.03, 1.0}}) EXPECT_NEAR(mssim(ref, test, p), oracle::brute_mssim(ref, test, p), 1e-9);
}

TEST(Ssim, MonotoneInNoise) {
    const auto ref = random_volume(16, 5);
    double prev = 1.0;
    for (double s : {0.01, 0.05, 0.2, 0.5}) {
        const double m = mssim(ref, perturbed(ref, s, 6));
        EXPECT_LT(m, prev);
        prev = m;
    }
}

TEST(Ssim, ConstantReferenceUsesUnitRange) {
    Volume3D ref(Grid{12, 12, 12}), test(Grid{12, 12, 12});
    for (float& x : ref.data()) x = 0.5f;
    for (float& x : test.data()) x = 0.5f;
    EXPECT_NEAR(mssim(ref, test), 1.0, 1e-12);
    SsimParams unit;
    unit.dynamic_range = 1.0;
    const auto noisy = perturbed(ref, 0.05, 1);
    EXPECT_DOUBLE_EQ(mssim(ref, noisy), mssim(ref, noisy, unit));
}

TEST(Ssim, Validation) {
    EXPECT_THROW(mssim(random_volume(8, 1), random_volume(8, 2)), DataError);
    SsimParams even;
    even.taps = 10;
    EXPECT_THROW(even.validate(), ConfigError);
}

TEST(Wilcoxon, MatchesEnumeration) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> u(-4, 4);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 12;
        std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n), 0.0);
        // Small integer range gives plenty of ties and zeros.
        for (double& x : a) x = u(rng);
        bool any = false;
        for (double x : a) any = any || x != 0;
        if (!any) a[0] = 1;
        const auto r = wilcoxon_signed_rank(a, b);
        EXPECT_TRUE(r.exact);
        EXPECT_NEAR(r.p_value, oracle::wilcoxon_enumeration_p(a, b), 1e-12) << "trial " << trial;
    }
}

TEST(Wilcoxon, AllPositiveSmallSample) {
    const std::vector<double> a{1.1, 2.2, 3.3, 4.4, 5.5}, b{1, 2, 3, 4, 5};
    const auto r = wilcoxon_signed_rank(a, b);
    EXPECT_EQ(r.n, 5);
    EXPECT_DOUBLE_EQ(r.w_plus, 15);
    EXPECT_DOUBLE_EQ(r.w_minus, 0);
    EXPECT_DOUBLE_EQ(r.p_value, 2.0 / 32.0);
}

TEST(Wilcoxon, SymmetricInArguments) {
    const std::vector<double> a{0.3, 0.9, 0.1, 0.5, 0.7, 0.2}, b{0.2, 0.4, 0.4, 0.1, 0.5, 0.6};
    EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(a, b).p_value, wilcoxon_signed_rank(b, a).p_value);
}

TEST(Wilcoxon, NormalApproximationAboveTwenty) {
    std::vector<double> a, b;
    for (int i = 1; i <= 25; ++i) {
        a.push_back(i);
        b.push_back(0);
    }
    a[0] = -1;  // W- = 1
    const auto r = wilcoxon_signed_rank(a, b);
    EXPECT_FALSE(r.exact);
    const double mean = 25.0 * 26 / 4, sd = std::sqrt(25.0 * 26 * 51 / 24);
    const double z = (std::abs(r.w_plus - mean) - 0.5) / sd;
    EXPECT_NEAR(r.p_value, std::erfc(z / std::sqrt(2.0)), 1e-12);
    EXPECT_LT(r.p_value, 1e-4);
}

TEST(Wilcoxon, Errors) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_THROW(wilcoxon_signed_rank(a, a), DataError);
    const std::vector<double> shorter{1, 2};
    EXPECT_THROW(wilcoxon_signed_rank(a, shorter), DataError);
}
