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

#include <random>

#include "iqt/error.hpp"
#include "iqt/unet.hpp"
#include "oracles.hpp"

using namespace iqt;
using namespace iqt::nn;

namespace {

Tensor5 random_tensor(const Shape5& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    Tensor5 t(s);
    for (double& x : t.data()) x = d(rng);
    return t;
}

Shape5 shape_of(const Graph& g, const std::vector<Shape5>& shapes, const std::string& name) { return shapes.at(std::size_t(g.find(name))); }

std::size_t conv_count(std::size_t cin, std::size_t cout, std::size_t taps) { return cin * cout * taps + cout; }

std::size_t rc_count(std::size_t cin, std::size_t f, int depth) {
    std::size_t n = conv_count(cin, f, 27) + 2 * f;
    for (int i = 1; i < depth; ++i) n += conv_count(f, f, 27) + 2 * f;
    return n + conv_count(cin, f, 1) + 2 * f;
}

std::size_t bb_count(std::size_t f, int b, int u) {
    const std::size_t h = f / 2;
    std::size_t n = conv_count(f, h, 1) + 2 * h;
    for (int i = 0; i < b; ++i) n += conv_count(h, h, 27) + 2 * h;
    return n + conv_count(h, f, 1) + 2 * f + conv_count(f, f, std::size_t(u));
}

}  // namespace

TEST(NetworkSpec, PoolAndSkipSchedule) {
    NetworkSpec s;
    s.k = 4;
    EXPECT_EQ(s.pool_window(1), (Dims3{2, 2, 1}));
    EXPECT_EQ(s.pool_window(2), (Dims3{2, 2, 1}));
    EXPECT_EQ(s.pool_window(3), (Dims3{2, 2, 2}));
    EXPECT_EQ(s.skip_upsample(1), 4);
    EXPECT_EQ(s.skip_upsample(2), 2);
    EXPECT_EQ(s.skip_upsample(3), 1);
    EXPECT_EQ(s.filters(1), 16);
    EXPECT_EQ(s.filters(5), 256);
}

TEST(NetworkSpec, Validation) {
    NetworkSpec s;
    s.k = 3;
    EXPECT_THROW(s.validate(), ConfigError);
    s = {};
    s.base_filters = 3;
    EXPECT_THROW(s.validate(), ConfigError);
    s = {};
    s.levels = 1;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(NetworkSpec, JsonRoundTrip) {
    NetworkSpec s;
    s.k = 8;
    s.base_filters = 4;
    const nlohmann::json j = s;
    EXPECT_EQ(j.get<NetworkSpec>(), s);
}

TEST(UNet, ShapesFactorFour) {
    const auto g = build_network(NetworkSpec{});
    const auto shapes = g.infer_shapes({2, 1, 32, 32, 8});
    EXPECT_EQ(shapes[std::size_t(g.output_node())], (Shape5{2, 1, 32, 32, 32}));
    EXPECT_EQ(shape_of(g, shapes, "enc1/rc/bn"), (Shape5{2, 16, 32, 32, 8}));
    EXPECT_EQ(shape_of(g, shapes, "enc2/rc/bn"), (Shape5{2, 32, 16, 16, 8}));
    EXPECT_EQ(shape_of(g, shapes, "enc3/rc/bn"), (Shape5{2, 64, 8, 8, 8}));
    EXPECT_EQ(shape_of(g, shapes, "enc4/rc/bn"), (Shape5{2, 128, 4, 4, 4}));
    EXPECT_EQ(shape_of(g, shapes, "enc5/rc/bn"), (Shape5{2, 256, 2, 2, 2}));
    EXPECT_EQ(shape_of(g, shapes, "dec1/bb/up"), (Shape5{2, 16, 32, 32, 32}));
    EXPECT_EQ(shape_of(g, shapes, "dec2/bb/up"), (Shape5{2, 32, 16, 16, 16}));
    EXPECT_EQ(g.find("dec3/bb/up"), -1);
    EXPECT_EQ(shape_of(g, shapes, "dec1/concat"), (Shape5{2, 32, 32, 32, 32}));
    EXPECT_EQ(shape_of(g, shapes, "dec4/concat"), (Shape5{2, 256, 4, 4, 4}));
}

TEST(UNet, ShapesFactorEight) {
    NetworkSpec s;
    s.k = 8;
    const auto g = build_network(s);
    const auto shapes = g.infer_shapes({1, 1, 32, 32, 4});
    EXPECT_EQ(shapes[std::size_t(g.output_node())], (Shape5{1, 1, 32, 32, 32}));
    EXPECT_EQ(shape_of(g, shapes, "enc4/rc/bn"), (Shape5{1, 128, 4, 4, 4}));
    EXPECT_EQ(shape_of(g, shapes, "dec1/bb/up"), (Shape5{1, 16, 32, 32, 32}));
    EXPECT_EQ(shape_of(g, shapes, "dec3/bb/up"), (Shape5{1, 64, 8, 8, 8}));
}

TEST(UNet, FactorTwo) {
    NetworkSpec s;
    s.k = 2;
    const auto g = build_network(s);
    EXPECT_EQ(g.infer_shapes({1, 1, 32, 32, 16})[std::size_t(g.output_node())], (Shape5{1, 1, 32, 32, 32}));
}

TEST(UNet, IndivisibleInputRejected) {
    const auto g = build_network(NetworkSpec{});
    EXPECT_THROW(g.infer_shapes({1, 1, 24, 32, 8}), DataError);
}

TEST(Blocks, BottleneckShapes) {
    Graph g;
    const int in = g.input(16);
    const int out = bottleneck_block(g, in, 16, 2, 4, "bb");
    g.output(out);
    const auto shapes = g.infer_shapes({1, 16, 8, 8, 2});
    EXPECT_EQ(shapes[std::size_t(out)], (Shape5{1, 16, 8, 8, 8}));
    EXPECT_EQ(shape_of(g, shapes, "bb/reduce/bn"), (Shape5{1, 8, 8, 8, 2}));
    Graph odd;
    EXPECT_THROW(bottleneck_block(odd, odd.input(16), 15, 2, 2, "x"), ConfigError);
}

TEST(Blocks, ResidualCoreOfZeroInput) {
    // Zero input with zero biases: every conv is zero, BN maps zero to beta.
    Graph g;
    g.output(residual_core(g, g.input(2), 4, 3, "rc"));
    ParamStore store;
    Rng rng(1);
    g.init_params(store, rng);
    store.get("rc/bn/beta").value.fill(0.25);
    const auto out = forward(g, store, Tensor5({2, 2, 4, 4, 4}), true, {});
    EXPECT_EQ(out.shape(), (Shape5{2, 4, 4, 4, 4}));
    for (double v : out.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(UNet, ParameterCountHandTally) {
    for (int k : {2, 4, 8}) {
        NetworkSpec s;
        s.k = k;
        s.base_filters = 4;
        s.levels = 4;
        const auto g = build_network(s);
        std::size_t expect = 0;
        std::size_t cin = 1;
        for (int level = 1; level <= s.levels; ++level) {
            expect += rc_count(cin, std::size_t(s.filters(level)), s.rc_depth);
            cin = std::size_t(s.filters(level));
        }
        for (int level = s.levels - 1; level >= 1; --level) {
            const std::size_t f = std::size_t(s.filters(level));
            expect += conv_count(2 * f, f, 8);
            if (s.skip_upsample(level) > 1) expect += bb_count(f, s.bb_shrink, s.skip_upsample(level));
            expect += rc_count(2 * f, f, s.rc_depth);
        }
        expect += conv_count(std::size_t(s.filters(1)), 1, 1);
        EXPECT_EQ(g.parameter_count(), expect) << "k=" << k;
        ParamStore store;
        Rng rng(2);
        g.init_params(store, rng);
        EXPECT_EQ(store.trainable_size(), expect);
    }
}

TEST(UNet, MicroGradientCheck) {
    NetworkSpec s;
    s.k = 4;
    s.base_filters = 2;
    s.levels = 4;
    s.bb_shrink = 1;
    s.rc_depth = 1;
    const auto g = build_network(s);
    ParamStore store;
    Rng rng(3);
    g.init_params(store, rng);
    auto x = random_tensor({2, 1, 8, 8, 2}, 4);
    const auto weights = random_tensor({2, 1, 8, 8, 8}, 5);
    const auto loss = [&] { return forward(g, store, x, true, {}).dot(weights); };
    store.zero_grad();
    Activations act;
    (void)forward(g, store, x, true, {}, &act);
    const auto gx = backward(g, store, act, weights);

    // Entries far below the overall gradient scale are compared against that
    // scale; round-off in the difference quotient swamps them otherwise.
    double scale = 0;
    for (const auto& p : store.params())
        if (p.trainable)
            for (double v : p.grad.data()) scale = std::max(scale, std::abs(v));
    const double floor = 1e-6 * scale;

    // Every trainable tensor is probed at a few entries.
    std::mt19937_64 pick(6);
    int checked = 0, bad = 0;
    for (auto& p : store.params()) {
        if (!p.trainable) continue;
        for (int probe = 0; probe < 3; ++probe) {
            const std::size_t i = std::uniform_int_distribution<std::size_t>(0, p.value.size() - 1)(pick);
            const auto numeric = oracle::numeric_gradient(loss, p.value.data().subspan(i, 1), 1e-5);
            const double err = oracle::relative_error(p.grad.data()[i], numeric[0], floor);
            ++checked;
            if (err > 1e-4) {
                ++bad;
                ADD_FAILURE() << p.name << "[" << i << "] analytic " << p.grad.data()[i] << " numeric " << numeric[0];
            }
        }
    }
    for (std::size_t i = 0; i < x.size(); i += 7) {
        const auto numeric = oracle::numeric_gradient(loss, x.data().subspan(i, 1), 1e-5);
        EXPECT_LT(oracle::relative_error(gx.data()[i], numeric[0], floor), 1e-4) << "input " << i;
    }
    EXPECT_GT(checked, 100);
    EXPECT_EQ(bad, 0);
}
