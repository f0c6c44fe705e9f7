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

#include "iqt/params.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "iqt/error.hpp"

namespace iqt::nn {

Parameter& ParamStore::add(const std::string& name, const Tensor5& init, bool trainable) {
    if (contains(name)) throw DataError("duplicate parameter name: " + name);
    Parameter p;
    p.name = name;
    p.value = init;
    p.grad = Tensor5(init.shape());
    p.m = Tensor5(init.shape());
    p.v = Tensor5(init.shape());
    p.trainable = trainable;
    params_.push_back(std::move(p));
    return params_.back();
}

bool ParamStore::contains(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return true;
    return false;
}

Parameter& ParamStore::get(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return p;
    throw DataError("unknown parameter: " + name);
}

const Parameter& ParamStore::get(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return p;
    throw DataError("unknown parameter: " + name);
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::trainable_size() const {
    std::size_t n = 0;
    for (const auto& p : params_)
        if (p.trainable) n += p.value.size();
    return n;
}

void AdamConfig::validate() const {
    if (!(lr0 > 0)) throw ConfigError("learning rate must be positive");
    if (!(decay >= 0)) throw ConfigError("learning-rate decay must be non-negative");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(epsilon > 0)) throw ConfigError("Adam epsilon must be positive");
}

double adam_learning_rate(const AdamConfig& cfg, std::int64_t t) { return cfg.lr0 / (1.0 + cfg.decay * double(t)); }

void adam_step(ParamStore& store, const AdamConfig& cfg) {
    const std::int64_t t = store.step() + 1;
    store.set_step(t);
    const double lr = adam_learning_rate(cfg, t);
    const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
    for (auto& p : store.params()) {
        if (!p.trainable) continue;
        auto val = p.value.data();
        const auto g = p.grad.data();
        auto m = p.m.data();
        auto v = p.v.data();
        for (std::size_t i = 0; i < val.size(); ++i) {
            if (!std::isfinite(g[i])) throw NumericError("non-finite gradient in " + p.name);
            m[i] = round_to_f32(cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i]);
            v[i] = round_to_f32(cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i]);
            const double update = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
            val[i] = round_to_f32(val[i] - update);
        }
    }
}

Tensor5 glorot_normal(const Shape5& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in + fan_out == 0) throw ConfigError("glorot init: zero fan");
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in + fan_out)));
    Tensor5 t(shape);
    for (double& x : t.data()) x = round_to_f32(dist(rng));
    return t;
}

namespace {

void write_blob(const std::filesystem::path& path, const Tensor5& t) {
    std::vector<char> bytes(t.size() * 4);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const std::uint32_t u = std::bit_cast<std::uint32_t>(float(t.data()[i]));
        for (int b = 0; b < 4; ++b) bytes[i * 4 + std::size_t(b)] = char((u >> (8 * b)) & 0xFF);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.write(bytes.data(), std::streamsize(bytes.size()))) throw DataError("cannot write " + path.string());
}

Tensor5 read_blob(const std::filesystem::path& path, const Shape5& shape) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != shape.size() * 4) throw DataError("blob " + path.string() + " has wrong length");
    Tensor5 t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= std::uint32_t(static_cast<unsigned char>(bytes[i * 4 + std::size_t(b)])) << (8 * b);
        const float f = std::bit_cast<float>(u);
        if (!std::isfinite(f)) throw DataError("blob " + path.string() + " contains non-finite values");
        t.data()[i] = f;
    }
    return t;
}

nlohmann::json shape_json(const Shape5& s) { return {s.n, s.c, s.x, s.y, s.z}; }

Shape5 shape_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 5) throw DataError("bad tensor shape in parameter manifest");
    return Shape5{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>(), j[4].get<int>()};
}

}  // namespace

void save_params(const ParamStore& store, const std::filesystem::path& dir, const nlohmann::json& graph) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "iqt-params";
    manifest["version"] = 1;
    manifest["step"] = store.step();
    manifest["graph"] = graph;
    manifest["tensors"] = nlohmann::json::array();
    for (std::size_t i = 0; i < store.params().size(); ++i) {
        const auto& p = store.params()[i];
        char stem[32];
        std::snprintf(stem, sizeof stem, "t%04zu", i);
        write_blob(dir / (std::string(stem) + ".value.f32"), p.value);
        nlohmann::json e{{"name", p.name}, {"shape", shape_json(p.value.shape())}, {"trainable", p.trainable}, {"file", stem}};
        if (p.trainable) {
            write_blob(dir / (std::string(stem) + ".m.f32"), p.m);
            write_blob(dir / (std::string(stem) + ".v.f32"), p.v);
        }
        manifest["tensors"].push_back(std::move(e));
    }
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!(out << manifest.dump(2) << '\n')) throw DataError("cannot write " + (dir / "manifest.json").string());
}

LoadedParams load_params(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw DataError("missing parameter manifest in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed parameter manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "iqt-params") throw DataError("not a parameter manifest: " + dir.string());
    LoadedParams out;
    out.graph = manifest.value("graph", nlohmann::json());
    out.store.set_step(manifest.at("step").get<std::int64_t>());
    for (const auto& e : manifest.at("tensors")) {
        const Shape5 shape = shape_from(e.at("shape"));
        const std::string stem = e.at("file").get<std::string>();
        const bool trainable = e.at("trainable").get<bool>();
        auto& p = out.store.add(e.at("name").get<std::string>(), read_blob(dir / (stem + ".value.f32"), shape), trainable);
        if (trainable) {
            p.m = read_blob(dir / (stem + ".m.f32"), shape);
            p.v = read_blob(dir / (stem + ".v.f32"), shape);
        }
    }
    return out;
}

}  // namespace iqt::nn
