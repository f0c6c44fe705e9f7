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

#include "iqt/error.hpp"
#include "iqt/phantom.hpp"

using namespace iqt;

namespace {

PhantomConfig small(std::uint64_t seed = 1) {
    PhantomConfig c;
    c.dims = {40, 36, 32};
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Phantom, MasksPartitionUnity) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto p = generate_phantom(small(seed));
        const auto wm = p.masks.channel(Tissue::WM), gm = p.masks.channel(Tissue::GM), ot = p.masks.channel(Tissue::Other);
        for (std::size_t i = 0; i < wm.size(); ++i) ASSERT_NEAR(double(wm[i]) + gm[i] + ot[i], 1.0, 1e-6);
    }
}

TEST(Phantom, IntensityIsMaskCombination) {
    auto c = small();
    c.lesion_count = 3;
    const auto p = generate_phantom(c);
    for (std::size_t i = 0; i < p.image.size(); ++i) {
        const double expect = c.wm_intensity * p.masks.at(Tissue::WM, i) + c.gm_intensity * p.masks.at(Tissue::GM, i);
        ASSERT_NEAR(p.image.data()[i], expect, 1e-6);
    }
}

TEST(Phantom, BackgroundIsExactlyZeroOutsideShell) {
    const auto p = generate_phantom(small());
    // Corners are far outside the outer ellipsoid.
    EXPECT_EQ(p.image.at(0, 0, 0), 0.0f);
    EXPECT_EQ(p.image.at(39, 35, 31), 0.0f);
    EXPECT_EQ(p.masks.at(Tissue::Other, 0), 1.0f);
    std::size_t zeros = 0;
    for (float v : p.image.data()) zeros += v == 0.0f;
    EXPECT_GT(zeros, p.image.size() / 4);
}

TEST(Phantom, HardBoundaryMeanIntensity) {
    auto c = small();
    c.wm_intensity = 2.0;
    c.gm_intensity = 1.0;
    c.boundary_softness_mm = 1e-4;
    const auto p = generate_phantom(c);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < p.image.size(); ++i) {
        num += double(p.masks.at(Tissue::WM, i)) * p.image.data()[i];
        den += p.masks.at(Tissue::WM, i);
    }
    EXPECT_NEAR(num / den, 2.0, 1e-3);
}

TEST(Phantom, SharpLimitGivesTwoSpikes) {
    auto c = small();
    c.boundary_softness_mm = 1e-4;
    const auto p = generate_phantom(c);
    std::size_t other = 0;
    for (float v : p.image.data())
        if (v != 0.0f && std::abs(v - float(c.wm_intensity)) > 1e-3 && std::abs(v - float(c.gm_intensity)) > 1e-3) ++other;
    EXPECT_LT(double(other) / double(p.image.size()), 1e-3);
}

TEST(Phantom, DeterministicPerSeed) {
    EXPECT_EQ(generate_phantom(small(5)).image, generate_phantom(small(5)).image);
    EXPECT_EQ(generate_phantom(small(5)).masks, generate_phantom(small(5)).masks);
}

TEST(Phantom, InvalidConfigs) {
    auto c = small();
    c.gm_intensity = 0.9;  // brighter than WM
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.dims = {8, 32, 32};
    EXPECT_THROW(generate_phantom(c), ConfigError);
    c = small();
    c.boundary_softness_mm = 0;
    EXPECT_THROW(generate_phantom(c), ConfigError);
}

TEST(Cohort, SingletonMatchesDerivedSubject) {
    const auto base = small();
    const auto cohort = generate_cohort(1, base, 99);
    ASSERT_EQ(cohort.size(), 1u);
    const auto direct = generate_phantom(cohort_subject_config(base, 99, 0));
    EXPECT_EQ(cohort[0].image, direct.image);
    EXPECT_EQ(cohort[0].masks, direct.masks);
}

TEST(Cohort, ReproducibleAndSeedSensitive) {
    const auto base = small();
    const auto a = generate_cohort(5, base, 11);
    const auto b = generate_cohort(5, base, 11);
    const auto c = generate_cohort(5, base, 12);
    bool any_diff = false;
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i].image, b[i].image);
        any_diff |= !(a[i].image == c[i].image);
    }
    EXPECT_TRUE(any_diff);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i + 1; j < 5; ++j) EXPECT_FALSE(a[i].image == a[j].image) << i << " vs " << j;
}
