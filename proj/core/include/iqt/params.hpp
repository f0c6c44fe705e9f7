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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqt/rng.hpp"
#include "iqt/tensor.hpp"

namespace iqt::nn {

struct Parameter {
    std::string name;
    Tensor5 value;
    Tensor5 grad;
    Tensor5 m;  // Adam first moment
    Tensor5 v;  // Adam second moment
    bool trainable = true;
};

/// Named parameters in insertion order. BN running statistics live here as
/// non-trainable entries so checkpoints capture them.
class ParamStore {
public:
    Parameter& add(const std::string& name, const Tensor5& init, bool trainable = true);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<Parameter>& params() noexcept { return params_; }
    const std::vector<Parameter>& params() const noexcept { return params_; }

    void zero_grad();
    /// Scalar count over trainable parameters.
    std::size_t trainable_size() const;

    std::int64_t step() const noexcept { return step_; }
    void set_step(std::int64_t t) noexcept { step_ = t; }

private:
    std::vector<Parameter> params_;
    std::int64_t step_ = 0;
};

struct AdamConfig {
    double lr0 = 1e-3;
    double decay = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;

    void validate() const;
};

/// Inverse-time schedule lr0 / (1 + decay * t).
double adam_learning_rate(const AdamConfig& cfg, std::int64_t t);

/// Advances the step counter and applies one bias-corrected Adam update to every
/// trainable parameter. Values are rounded to float after the update so that
/// in-memory parameters match their f32 checkpoint exactly.
void adam_step(ParamStore& store, const AdamConfig& cfg);

/// i.i.d. N(0, 2 / (fan_in + fan_out)), rounded to float.
Tensor5 glorot_normal(const Shape5& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Writes manifest.json (shapes, step, `graph`) and one little-endian f32 blob per
/// tensor, Adam moments included.
void save_params(const ParamStore& store, const std::filesystem::path& dir, const nlohmann::json& graph);

struct LoadedParams {
    ParamStore store;
    nlohmann::json graph;
};
LoadedParams load_params(const std::filesystem::path& dir);

}  // namespace iqt::nn
