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

#include "iqt/graph.hpp"

#include "iqt/error.hpp"

namespace iqt::nn {

const char* to_string(LayerKind k) noexcept {
    switch (k) {
        case LayerKind::Input: return "input";
        case LayerKind::Conv3d: return "conv3d";
        case LayerKind::Deconv3d: return "deconv3d";
        case LayerKind::MaxPool3d: return "maxpool3d";
        case LayerKind::Relu: return "relu";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Concat: return "concat";
        case LayerKind::Add: return "add";
        case LayerKind::Output: return "output";
    }
    return "?";
}

namespace {

LayerKind kind_from(const std::string& s) {
    for (auto k : {LayerKind::Input, LayerKind::Conv3d, LayerKind::Deconv3d, LayerKind::MaxPool3d, LayerKind::Relu,
                   LayerKind::BatchNorm, LayerKind::Concat, LayerKind::Add, LayerKind::Output})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown layer kind: " + s);
}

std::size_t volume(const Dims3& d) { return std::size_t(d[0]) * std::size_t(d[1]) * std::size_t(d[2]); }

}  // namespace

int Graph::push(LayerNode n) {
    if (n.name.empty()) throw ConfigError("layer name must not be empty");
    if (find(n.name) >= 0) throw ConfigError("duplicate layer name: " + n.name);
    for (int in : n.inputs)
        if (in < 0 || in >= int(nodes_.size())) throw ConfigError("layer " + n.name + " references an unknown input");
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
}

int Graph::find(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].name == name) return int(i);
    return -1;
}

int Graph::input(int channels, const std::string& name) {
    if (channels < 1) throw ConfigError("input channels must be positive");
    for (const auto& n : nodes_)
        if (n.kind == LayerKind::Input) throw ConfigError("graph already has an input");
    return push({LayerKind::Input, name, {}, channels, {1, 1, 1}, {}});
}

int Graph::conv(int in, int filters, const Dims3& kernel, const std::string& name) {
    if (filters < 1) throw ConfigError("conv " + name + ": filters must be positive");
    for (int k : kernel)
        if (k < 1 || k % 2 == 0) throw ConfigError("conv " + name + ": kernel dims must be odd for same padding");
    const int id = push({LayerKind::Conv3d, name, {in}, filters, kernel, {name + "/kernel", name + "/bias"}});
    return id;
}

int Graph::deconv(int in, int filters, const Dims3& stride, const std::string& name) {
    if (filters < 1) throw ConfigError("deconv " + name + ": filters must be positive");
    for (int s : stride)
        if (s < 1) throw ConfigError("deconv " + name + ": stride must be positive");
    return push({LayerKind::Deconv3d, name, {in}, filters, stride, {name + "/kernel", name + "/bias"}});
}

int Graph::maxpool(int in, const Dims3& window, const std::string& name) {
    for (int w : window)
        if (w < 1) throw ConfigError("maxpool " + name + ": window must be positive");
    return push({LayerKind::MaxPool3d, name, {in}, node(in).channels, window, {}});
}

int Graph::relu(int in, const std::string& name) { return push({LayerKind::Relu, name, {in}, node(in).channels, {1, 1, 1}, {}}); }

int Graph::batchnorm(int in, const std::string& name) {
    return push({LayerKind::BatchNorm,
                 name,
                 {in},
                 node(in).channels,
                 {1, 1, 1},
                 {name + "/gamma", name + "/beta", name + "/running_mean", name + "/running_var"}});
}

int Graph::concat(int a, int b, const std::string& name) {
    return push({LayerKind::Concat, name, {a, b}, node(a).channels + node(b).channels, {1, 1, 1}, {}});
}

int Graph::add(int a, int b, const std::string& name) {
    if (node(a).channels != node(b).channels) throw ConfigError("add " + name + ": channel counts differ");
    return push({LayerKind::Add, name, {a, b}, node(a).channels, {1, 1, 1}, {}});
}

int Graph::output(int in, const std::string& name) {
    for (const auto& n : nodes_)
        if (n.kind == LayerKind::Output) throw ConfigError("graph already has an output");
    return push({LayerKind::Output, name, {in}, node(in).channels, {1, 1, 1}, {}});
}

int Graph::input_node() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].kind == LayerKind::Input) return int(i);
    throw ConfigError("graph has no input");
}

int Graph::output_node() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].kind == LayerKind::Output) return int(i);
    throw ConfigError("graph has no output");
}

std::vector<Shape5> Graph::infer_shapes(const Shape5& input) const {
    std::vector<Shape5> s(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const LayerNode& n = nodes_[i];
        const Shape5 a = n.inputs.empty() ? Shape5{} : s[std::size_t(n.inputs[0])];
        switch (n.kind) {
            case LayerKind::Input:
                if (input.c != n.channels) throw DataError("input has " + std::to_string(input.c) + " channels, graph expects " + std::to_string(n.channels));
                s[i] = input;
                break;
            case LayerKind::Conv3d:
                s[i] = {a.n, n.channels, a.x, a.y, a.z};
                break;
            case LayerKind::Deconv3d:
                s[i] = {a.n, n.channels, a.x * n.window[0], a.y * n.window[1], a.z * n.window[2]};
                break;
            case LayerKind::MaxPool3d:
                if (a.x % n.window[0] || a.y % n.window[1] || a.z % n.window[2])
                    throw DataError("maxpool " + n.name + ": input " + a.str() + " not divisible by window");
                s[i] = {a.n, a.c, a.x / n.window[0], a.y / n.window[1], a.z / n.window[2]};
                break;
            case LayerKind::Concat: {
                const Shape5 b = s[std::size_t(n.inputs[1])];
                if (a.n != b.n || a.x != b.x || a.y != b.y || a.z != b.z)
                    throw DataError("concat " + n.name + ": " + a.str() + " vs " + b.str());
                s[i] = {a.n, a.c + b.c, a.x, a.y, a.z};
                break;
            }
            case LayerKind::Add:
                if (!(a == s[std::size_t(n.inputs[1])])) throw DataError("add " + n.name + ": operand shapes differ");
                s[i] = a;
                break;
            default:
                s[i] = a;
        }
    }
    return s;
}

void Graph::init_params(ParamStore& store, Rng& rng) const {
    for (const auto& n : nodes_) {
        if (n.kind == LayerKind::Conv3d || n.kind == LayerKind::Deconv3d) {
            const int cin = node(n.inputs[0]).channels;
            const std::size_t taps = volume(n.window);
            const Shape5 ks = n.kind == LayerKind::Conv3d ? Shape5{n.channels, cin, n.window[0], n.window[1], n.window[2]}
                                                           : Shape5{cin, n.channels, n.window[0], n.window[1], n.window[2]};
            store.add(n.params[0], glorot_normal(ks, std::size_t(cin) * taps, std::size_t(n.channels) * taps, rng));
            store.add(n.params[1], Tensor5(Shape5{1, n.channels, 1, 1, 1}));
        } else if (n.kind == LayerKind::BatchNorm) {
            const Shape5 cs{1, n.channels, 1, 1, 1};
            store.add(n.params[0], Tensor5(cs, 1.0));
            store.add(n.params[1], Tensor5(cs));
            store.add(n.params[2], Tensor5(cs), false);
            store.add(n.params[3], Tensor5(cs, 1.0), false);
        }
    }
}

std::size_t Graph::parameter_count() const {
    std::size_t total = 0;
    for (const auto& n : nodes_) {
        if (n.kind == LayerKind::Conv3d || n.kind == LayerKind::Deconv3d)
            total += std::size_t(node(n.inputs[0]).channels) * std::size_t(n.channels) * volume(n.window) + std::size_t(n.channels);
        else if (n.kind == LayerKind::BatchNorm)
            total += 2 * std::size_t(n.channels);
    }
    return total;
}

nlohmann::json Graph::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& n : nodes_)
        out.push_back({{"kind", to_string(n.kind)}, {"name", n.name}, {"inputs", n.inputs}, {"channels", n.channels}, {"window", n.window}});
    return out;
}

Graph Graph::from_json(const nlohmann::json& j) {
    Graph g;
    try {
        for (const auto& e : j) {
            const LayerKind kind = kind_from(e.at("kind").get<std::string>());
            const std::string name = e.at("name").get<std::string>();
            const auto in = e.at("inputs").get<std::vector<int>>();
            const int ch = e.at("channels").get<int>();
            const auto w = e.at("window").get<Dims3>();
            const auto need = [&](std::size_t k) {
                if (in.size() != k) throw ConfigError("layer " + name + " has the wrong number of inputs");
            };
            switch (kind) {
                case LayerKind::Input: need(0); g.input(ch, name); break;
                case LayerKind::Conv3d: need(1); g.conv(in[0], ch, w, name); break;
                case LayerKind::Deconv3d: need(1); g.deconv(in[0], ch, w, name); break;
                case LayerKind::MaxPool3d: need(1); g.maxpool(in[0], w, name); break;
                case LayerKind::Relu: need(1); g.relu(in[0], name); break;
                case LayerKind::BatchNorm: need(1); g.batchnorm(in[0], name); break;
                case LayerKind::Concat: need(2); g.concat(in[0], in[1], name); break;
                case LayerKind::Add: need(2); g.add(in[0], in[1], name); break;
                case LayerKind::Output: need(1); g.output(in[0], name); break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed graph description: " + std::string(e.what()));
    }
    return g;
}

Tensor5 forward(const Graph& g, ParamStore& store, const Tensor5& input, bool train, const BatchNormState& bn, Activations* act) {
    const auto& nodes = g.nodes();
    const std::size_t count = nodes.size();
    std::vector<Tensor5> local;
    std::vector<PoolCache> local_pools;
    std::vector<BatchNormCache> local_norms;
    std::vector<Tensor5>& val = act ? act->values : local;
    std::vector<PoolCache>& pools = act ? act->pools : local_pools;
    std::vector<BatchNormCache>& norms = act ? act->norms : local_norms;
    val.assign(count, Tensor5());
    pools.assign(act ? count : 0, PoolCache());
    norms.assign(act ? count : 0, BatchNormCache());
    if (act) act->train = train;

    // Last consumer of each node, for early release when nothing is recorded.
    std::vector<int> last_use(count, -1);
    for (std::size_t i = 0; i < count; ++i)
        for (int in : nodes[i].inputs) last_use[std::size_t(in)] = int(i);

    int out_id = -1;
    for (std::size_t i = 0; i < count; ++i) {
        const LayerNode& n = nodes[i];
        const Tensor5* a = n.inputs.empty() ? nullptr : &val[std::size_t(n.inputs[0])];
        switch (n.kind) {
            case LayerKind::Input:
                if (input.shape().c != n.channels) throw DataError("input channel count does not match graph");
                val[i] = input;
                break;
            case LayerKind::Conv3d:
                val[i] = conv3d_forward(*a, store.get(n.params[0]).value, store.get(n.params[1]).value);
                break;
            case LayerKind::Deconv3d:
                val[i] = deconv3d_forward(*a, store.get(n.params[0]).value, store.get(n.params[1]).value);
                break;
            case LayerKind::MaxPool3d:
                val[i] = maxpool3d_forward(*a, n.window, act ? &pools[i] : nullptr);
                break;
            case LayerKind::Relu:
                val[i] = relu_forward(*a);
                break;
            case LayerKind::BatchNorm:
                val[i] = batchnorm_forward(*a, store.get(n.params[0]).value, store.get(n.params[1]).value,
                                           store.get(n.params[2]).value, store.get(n.params[3]).value, train, bn,
                                           act ? &norms[i] : nullptr);
                break;
            case LayerKind::Concat:
                val[i] = concat_channels(*a, val[std::size_t(n.inputs[1])]);
                break;
            case LayerKind::Add:
                val[i] = *a;
                val[i].add(val[std::size_t(n.inputs[1])]);
                break;
            case LayerKind::Output:
                val[i] = *a;
                out_id = int(i);
                break;
        }
        if (!act)
            for (int in : n.inputs)
                if (last_use[std::size_t(in)] == int(i)) val[std::size_t(in)] = Tensor5();
    }
    if (out_id < 0) throw ConfigError("graph has no output");
    return act ? val[std::size_t(out_id)] : std::move(val[std::size_t(out_id)]);
}

Tensor5 backward(const Graph& g, ParamStore& store, const Activations& act, const Tensor5& grad_output) {
    const auto& nodes = g.nodes();
    if (act.values.size() != nodes.size()) throw DataError("backward: activations do not belong to this graph");
    std::vector<Tensor5> grad(nodes.size());
    const int out_id = g.output_node();
    if (!(grad_output.shape() == act.values[std::size_t(out_id)].shape())) throw DataError("backward: output gradient shape mismatch");
    grad[std::size_t(out_id)] = grad_output;

    const auto accumulate = [&](int id, Tensor5&& t) {
        Tensor5& slot = grad[std::size_t(id)];
        if (slot.size() == 0)
            slot = std::move(t);
        else
            slot.add(t);
    };
    const auto zeros_like = [&](int id) { return Tensor5(act.values[std::size_t(id)].shape()); };

    int in_id = g.input_node();
    for (int i = int(nodes.size()) - 1; i >= 0; --i) {
        const LayerNode& n = nodes[std::size_t(i)];
        Tensor5 gy = std::move(grad[std::size_t(i)]);
        if (gy.size() == 0 || n.kind == LayerKind::Input) {
            if (n.kind == LayerKind::Input) grad[std::size_t(i)] = std::move(gy);
            continue;
        }
        const int a = n.inputs[0];
        switch (n.kind) {
            case LayerKind::Conv3d:
            case LayerKind::Deconv3d: {
                auto& k = store.get(n.params[0]);
                auto& b = store.get(n.params[1]);
                Tensor5 gx = zeros_like(a);
                if (n.kind == LayerKind::Conv3d)
                    conv3d_backward(act.values[std::size_t(a)], k.value, gy, &gx, &k.grad, &b.grad);
                else
                    deconv3d_backward(act.values[std::size_t(a)], k.value, gy, &gx, &k.grad, &b.grad);
                accumulate(a, std::move(gx));
                break;
            }
            case LayerKind::MaxPool3d:
                accumulate(a, maxpool3d_backward(act.values[std::size_t(a)].shape(), n.window, act.pools[std::size_t(i)], gy));
                break;
            case LayerKind::Relu:
                accumulate(a, relu_backward(act.values[std::size_t(i)], gy));
                break;
            case LayerKind::BatchNorm: {
                auto& gamma = store.get(n.params[0]);
                auto& beta = store.get(n.params[1]);
                Tensor5 gx = zeros_like(a);
                batchnorm_backward(gamma.value, act.norms[std::size_t(i)], gy, &gx, &gamma.grad, &beta.grad);
                accumulate(a, std::move(gx));
                break;
            }
            case LayerKind::Concat: {
                const int b = n.inputs[1];
                Tensor5 ga = zeros_like(a), gb = zeros_like(b);
                split_channels(gy, act.values[std::size_t(a)].shape().c, ga, gb);
                accumulate(a, std::move(ga));
                accumulate(b, std::move(gb));
                break;
            }
            case LayerKind::Add:
                accumulate(n.inputs[1], Tensor5(gy));
                accumulate(a, std::move(gy));
                break;
            case LayerKind::Output:
                accumulate(a, std::move(gy));
                break;
            case LayerKind::Input:
                break;
        }
    }
    Tensor5 gin = std::move(grad[std::size_t(in_id)]);
    if (gin.size() == 0) gin = zeros_like(in_id);
    return gin;
}

}  // namespace iqt::nn
