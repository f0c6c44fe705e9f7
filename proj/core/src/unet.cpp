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

#include "iqt/unet.hpp"

#include <bit>

#include "iqt/error.hpp"

namespace iqt::nn {

namespace {
int log2i(int k) { return std::countr_zero(unsigned(k)); }
}  // namespace

void NetworkSpec::validate() const {
    if (k != 2 && k != 4 && k != 8) throw ConfigError("network k must be 2, 4 or 8");
    if (levels <= log2i(k)) throw ConfigError("network needs more levels than log2(k)");
    if (levels > 8) throw ConfigError("network levels must be at most 8");
    if (base_filters < 1) throw ConfigError("base_filters must be positive");
    if (bb_shrink < 1) throw ConfigError("bb_shrink must be positive");
    if (rc_depth < 1) throw ConfigError("rc_depth must be positive");
    if (in_channels < 1) throw ConfigError("in_channels must be positive");
    for (int level = 1; level < levels; ++level)
        if (skip_upsample(level) > 1 && filters(level) % 2 != 0)
            throw ConfigError("bottleneck block at level " + std::to_string(level) + " needs an even filter count");
}

Dims3 NetworkSpec::pool_window(int level) const noexcept { return level <= log2i(k) ? Dims3{2, 2, 1} : Dims3{2, 2, 2}; }

int NetworkSpec::skip_upsample(int level) const noexcept {
    const int u = k >> (level - 1);
    return u > 1 ? u : 1;
}

Dims3 NetworkSpec::input_divisors() const noexcept {
    return {1 << (levels - 1), 1 << (levels - 1), 1 << (levels - 1 - log2i(k))};
}

void to_json(nlohmann::json& j, const NetworkSpec& s) {
    j = {{"k", s.k},
         {"base_filters", s.base_filters},
         {"levels", s.levels},
         {"bb_shrink", s.bb_shrink},
         {"rc_depth", s.rc_depth},
         {"in_channels", s.in_channels}};
}

void from_json(const nlohmann::json& j, NetworkSpec& s) {
    NetworkSpec d;
    s.k = j.value("k", d.k);
    s.base_filters = j.value("base_filters", d.base_filters);
    s.levels = j.value("levels", d.levels);
    s.bb_shrink = j.value("bb_shrink", d.bb_shrink);
    s.rc_depth = j.value("rc_depth", d.rc_depth);
    s.in_channels = j.value("in_channels", d.in_channels);
}

namespace {

int conv_relu_bn(Graph& g, int in, int filters, int kernel, const std::string& prefix) {
    int x = g.conv(in, filters, {kernel, kernel, kernel}, prefix + "/conv");
    x = g.relu(x, prefix + "/relu");
    return g.batchnorm(x, prefix + "/bn");
}

}  // namespace

int residual_core(Graph& g, int in, int filters, int depth, const std::string& prefix) {
    int x = in;
    for (int i = 1; i <= depth; ++i) x = conv_relu_bn(g, x, filters, 3, prefix + "/c" + std::to_string(i));
    const int skip = g.conv(in, filters, {1, 1, 1}, prefix + "/skip");
    const int sum = g.add(x, skip, prefix + "/sum");
    const int r = g.relu(sum, prefix + "/relu");
    return g.batchnorm(r, prefix + "/bn");
}

int bottleneck_block(Graph& g, int in, int filters, int shrink_depth, int upsample, const std::string& prefix) {
    if (filters % 2 != 0) throw ConfigError("bottleneck block " + prefix + " needs an even filter count");
    if (g.channels(in) != filters) throw ConfigError("bottleneck block " + prefix + " input must have f channels");
    const int half = filters / 2;
    int x = conv_relu_bn(g, in, half, 1, prefix + "/reduce");
    for (int i = 1; i <= shrink_depth; ++i) x = conv_relu_bn(g, x, half, 3, prefix + "/c" + std::to_string(i));
    x = conv_relu_bn(g, x, filters, 1, prefix + "/expand");
    const int sum = g.add(x, in, prefix + "/sum");
    return g.deconv(sum, filters, {1, 1, upsample}, prefix + "/up");
}

Graph build_network(const NetworkSpec& spec) {
    spec.validate();
    Graph g;
    int x = g.input(spec.in_channels);
    std::vector<int> skips(std::size_t(spec.levels) + 1, -1);
    for (int level = 1; level <= spec.levels; ++level) {
        const std::string name = "enc" + std::to_string(level);
        x = residual_core(g, x, spec.filters(level), spec.rc_depth, name + "/rc");
        skips[std::size_t(level)] = x;
        if (level < spec.levels) x = g.maxpool(x, spec.pool_window(level), name + "/pool");
    }
    for (int level = spec.levels - 1; level >= 1; --level) {
        const std::string name = "dec" + std::to_string(level);
        const int f = spec.filters(level);
        const int up = g.deconv(x, f, {2, 2, 2}, name + "/up");
        int skip = skips[std::size_t(level)];
        if (const int u = spec.skip_upsample(level); u > 1) skip = bottleneck_block(g, skip, f, spec.bb_shrink, u, name + "/bb");
        const int cat = g.concat(up, skip, name + "/concat");
        x = residual_core(g, cat, f, spec.rc_depth, name + "/rc");
    }
    x = g.conv(x, 1, {1, 1, 1}, "head");
    g.output(x);
    return g;
}

}  // namespace iqt::nn
