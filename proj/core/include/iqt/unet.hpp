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

#include <string>

#include <nlohmann/json.hpp>

#include "iqt/graph.hpp"

namespace iqt::nn {

/// Anisotropic U-Net hyperparameters.
struct NetworkSpec {
    int k = 4;              // z up-scaling factor: 2, 4 or 8
    int base_filters = 16;  // doubled per level
    int levels = 5;
    int bb_shrink = 2;      // b of the bottleneck blocks
    int rc_depth = 3;       // 3x3x3 convolutions per residual core
    int in_channels = 1;

    void validate() const;
    int filters(int level) const noexcept { return base_filters << (level - 1); }
    /// Pool window applied after encoder level `level` (1-based).
    Dims3 pool_window(int level) const noexcept;
    /// z up-sampling of the bottleneck block on skip `level`; 1 means a direct skip.
    int skip_upsample(int level) const noexcept;
    /// Required divisors of the input (x, y, z) so every pool divides evenly.
    Dims3 input_divisors() const noexcept;

    bool operator==(const NetworkSpec&) const = default;
};

void to_json(nlohmann::json& j, const NetworkSpec& s);
void from_json(const nlohmann::json& j, NetworkSpec& s);

/// RC(b): b x [conv 3^3 + ReLU + BN] summed with a 1^3 projection of the input,
/// followed by ReLU + BN. Returns the node id of the block output.
int residual_core(Graph& g, int in, int filters, int depth, const std::string& prefix);

/// BB(b, u): 1^3 conv to f/2, b x 3^3 conv at f/2, 1^3 conv back to f (each with
/// ReLU + BN), identity skip, then a (1, 1, u) transpose convolution.
int bottleneck_block(Graph& g, int in, int filters, int shrink_depth, int upsample, const std::string& prefix);

Graph build_network(const NetworkSpec& spec);

}  // namespace iqt::nn
