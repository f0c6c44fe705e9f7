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
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqt/graph.hpp"
#include "iqt/params.hpp"
#include "iqt/patches.hpp"

namespace iqt::nn {

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 100;
    int patience = 5;
    AdamConfig adam;
    double bn_momentum = 0.99;
    std::uint64_t seed = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Stops once `patience` consecutive epochs fail to improve strictly on the best loss.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience);
    /// Records one epoch's validation loss; returns true when training should stop.
    bool update(double val_loss);
    double best() const noexcept { return best_; }
    int best_epoch() const noexcept { return best_epoch_; }
    bool improved() const noexcept { return improved_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    int stale_ = 0;
    double best_;
    bool improved_ = false;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double learning_rate = 0;
    double seconds = 0;
};

struct TrainResult {
    ParamStore params;  // best-validation checkpoint
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_loss = 0;
    bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Gathers pairs `ids` of a library into (n, 1, ...) input and target tensors.
std::pair<Tensor5, Tensor5> make_batch(const PatchLibrary& lib, std::span<const std::size_t> ids);

/// Mean squared error over every voxel of the library, BN in inference mode.
double evaluate_loss(const Graph& g, ParamStore& params, const PatchLibrary& lib, int batch_size, const BatchNormState& bn);

/// Mini-batch Adam on the mean voxelwise MSE. Each epoch visits the training
/// pairs in a seed-determined shuffle; the returned parameters are those with
/// the lowest validation loss.
TrainResult train(const Graph& g, ParamStore params, const PatchLibrary& train_lib, const PatchLibrary& val_lib,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Predicts a high-field volume from `lo` with patches on the covering grid,
/// averaged where they overlap. Output dims (nx, ny, k * nz), z spacing / k.
Volume3D infer_volume(const Graph& g, ParamStore& params, const Volume3D& lo, const PatchSpec& spec, int batch_size = 8,
                      const BatchNormState& bn = {});

}  // namespace iqt::nn
