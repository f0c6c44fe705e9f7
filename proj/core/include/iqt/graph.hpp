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
#include <vector>

#include <nlohmann/json.hpp>

#include "iqt/nn_ops.hpp"
#include "iqt/params.hpp"
#include "iqt/rng.hpp"

namespace iqt::nn {

enum class LayerKind { Input, Conv3d, Deconv3d, MaxPool3d, Relu, BatchNorm, Concat, Add, Output };

const char* to_string(LayerKind k) noexcept;

struct LayerNode {
    LayerKind kind = LayerKind::Input;
    std::string name;
    std::vector<int> inputs;
    int channels = 0;        // output channels
    Dims3 window{1, 1, 1};   // conv kernel, deconv kernel (= stride) or pool window
    std::vector<std::string> params;
};

/// Static layer DAG built in topological order. Parameters are referenced by
/// name: "<layer>/kernel", "<layer>/bias", "<layer>/gamma", "<layer>/beta",
/// plus non-trainable "<layer>/running_mean" and "<layer>/running_var".
class Graph {
public:
    int input(int channels, const std::string& name = "input");
    int conv(int in, int filters, const Dims3& kernel, const std::string& name);
    int deconv(int in, int filters, const Dims3& stride, const std::string& name);
    int maxpool(int in, const Dims3& window, const std::string& name);
    int relu(int in, const std::string& name);
    int batchnorm(int in, const std::string& name);
    int concat(int a, int b, const std::string& name);
    int add(int a, int b, const std::string& name);
    int output(int in, const std::string& name = "output");

    const std::vector<LayerNode>& nodes() const noexcept { return nodes_; }
    const LayerNode& node(int id) const { return nodes_.at(std::size_t(id)); }
    int find(const std::string& name) const;
    int input_node() const;
    int output_node() const;
    int channels(int id) const { return node(id).channels; }

    /// Output shape of every node for a given input; throws DataError on any
    /// incompatibility (pool divisibility, add/concat mismatch).
    std::vector<Shape5> infer_shapes(const Shape5& input) const;

    /// Glorot-normal kernels, zero biases, unit BN gain, zero shift, running
    /// mean 0 and variance 1.
    void init_params(ParamStore& store, Rng& rng) const;
    /// Trainable scalar count implied by the node attributes.
    std::size_t parameter_count() const;

    nlohmann::json to_json() const;
    static Graph from_json(const nlohmann::json& j);

private:
    int push(LayerNode n);
    std::vector<LayerNode> nodes_;
};

/// Intermediate values kept for the backward pass.
struct Activations {
    std::vector<Tensor5> values;
    std::vector<PoolCache> pools;
    std::vector<BatchNormCache> norms;
    bool train = false;
};

/// Runs the graph. BN uses batch statistics and updates running statistics when
/// `train` is set. With `act` null, intermediates are released as soon as
/// their last consumer has run.
Tensor5 forward(const Graph& g, ParamStore& store, const Tensor5& input, bool train, const BatchNormState& bn,
                Activations* act = nullptr);

/// Reverse pass from d(loss)/d(output). Accumulates into parameter grads and
/// returns d(loss)/d(input). Nodes the output does not depend on get no gradient.
Tensor5 backward(const Graph& g, ParamStore& store, const Activations& act, const Tensor5& grad_output);

}  // namespace iqt::nn
