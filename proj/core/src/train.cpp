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

#include "iqt/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "iqt/error.hpp"

namespace iqt::nn {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (!(bn_momentum >= 0 && bn_momentum < 1)) throw ConfigError("bn_momentum must lie in [0, 1)");
    adam.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"batch_size", c.batch_size}, {"max_epochs", c.max_epochs}, {"patience", c.patience}, {"lr0", c.adam.lr0},
         {"decay", c.adam.decay},      {"beta1", c.adam.beta1},       {"beta2", c.adam.beta2},   {"epsilon", c.adam.epsilon},
         {"bn_momentum", c.bn_momentum}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    const TrainConfig d;
    c.batch_size = j.value("batch_size", d.batch_size);
    c.max_epochs = j.value("max_epochs", d.max_epochs);
    c.patience = j.value("patience", d.patience);
    c.adam.lr0 = j.value("lr0", d.adam.lr0);
    c.adam.decay = j.value("decay", d.adam.decay);
    c.adam.beta1 = j.value("beta1", d.adam.beta1);
    c.adam.beta2 = j.value("beta2", d.adam.beta2);
    c.adam.epsilon = j.value("epsilon", d.adam.epsilon);
    c.bn_momentum = j.value("bn_momentum", d.bn_momentum);
    c.seed = j.value("seed", d.seed);
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
    if (patience < 1) throw ConfigError("patience must be at least 1");
}

bool EarlyStopping::update(double val_loss) {
    ++epoch_;
    improved_ = val_loss < best_;
    if (improved_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
        stale_ = 0;
    } else {
        ++stale_;
    }
    return stale_ >= patience_;
}

std::pair<Tensor5, Tensor5> make_batch(const PatchLibrary& lib, std::span<const std::size_t> ids) {
    const auto lo = lib.spec.low_size;
    const auto hi = lib.spec.high_size();
    Tensor5 x(Shape5{int(ids.size()), 1, lo[0], lo[1], lo[2]});
    Tensor5 y(Shape5{int(ids.size()), 1, hi[0], hi[1], hi[2]});
    for (std::size_t b = 0; b < ids.size(); ++b) {
        const PatchPair& p = lib.pairs.at(ids[b]);
        if (p.low.size() != lib.spec.low_voxels() || p.high.size() != lib.spec.high_voxels())
            throw DataError("patch pair " + std::to_string(ids[b]) + " does not match the library geometry");
        std::copy(p.low.begin(), p.low.end(), x.channel(int(b), 0));
        std::copy(p.high.begin(), p.high.end(), y.channel(int(b), 0));
    }
    return {std::move(x), std::move(y)};
}

double evaluate_loss(const Graph& g, ParamStore& params, const PatchLibrary& lib, int batch_size, const BatchNormState& bn) {
    if (lib.pairs.empty()) throw DataError("cannot evaluate on an empty patch library");
    double sum = 0;
    std::vector<std::size_t> ids;
    for (std::size_t start = 0; start < lib.pairs.size(); start += std::size_t(batch_size)) {
        ids.clear();
        for (std::size_t i = start; i < std::min(lib.pairs.size(), start + std::size_t(batch_size)); ++i) ids.push_back(i);
        auto [x, y] = make_batch(lib, ids);
        const Tensor5 pred = forward(g, params, x, false, bn);
        if (!(pred.shape() == y.shape())) throw DataError("network output " + pred.shape().str() + " does not match targets " + y.shape().str());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred.data()[i] - y.data()[i];
            sum += d * d;
        }
    }
    const double loss = sum / (double(lib.pairs.size()) * double(lib.spec.high_voxels()));
    if (!std::isfinite(loss)) throw NumericError("validation loss is not finite");
    return loss;
}

TrainResult train(const Graph& g, ParamStore params, const PatchLibrary& train_lib, const PatchLibrary& val_lib,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_lib.pairs.empty() || val_lib.pairs.empty()) throw DataError("training and validation libraries must be nonempty");
    if (!(train_lib.spec == val_lib.spec)) throw DataError("training and validation libraries use different patch geometry");
    {
        const auto lo = train_lib.spec.low_size;
        const auto shapes = g.infer_shapes(Shape5{1, 1, lo[0], lo[1], lo[2]});
        const Shape5 out = shapes[std::size_t(g.output_node())];
        const auto hi = train_lib.spec.high_size();
        if (out.c != 1 || out.x != hi[0] || out.y != hi[1] || out.z != hi[2])
            throw DataError("network maps low patches to " + out.str() + ", library expects high patches of depth " + std::to_string(hi[2]));
    }
    const BatchNormState bn{1e-3, cfg.bn_momentum};

    TrainResult result;
    EarlyStopping stopper(cfg.patience);
    std::vector<std::size_t> order(train_lib.pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Activations act;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng(derive_seed(cfg.seed, std::uint64_t(epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        double weighted = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
            // A lone trailing sample cannot form BN batch statistics at the deepest level.
            if (end - start < 2 && order.size() >= 2) continue;
            auto [x, y] = make_batch(train_lib, std::span<const std::size_t>(order).subspan(start, end - start));
            params.zero_grad();
            const Tensor5 pred = forward(g, params, x, true, bn, &act);
            const Loss loss = mse_loss(pred, y);
            if (!std::isfinite(loss.value)) throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
            backward(g, params, act, loss.grad);
            adam_step(params, cfg.adam);
            weighted += loss.value * double(end - start);
        }
        act = Activations();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = weighted / double(order.size());
        rec.val_loss = evaluate_loss(g, params, val_lib, cfg.batch_size, bn);
        rec.learning_rate = adam_learning_rate(cfg.adam, params.step());
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        const bool stop = stopper.update(rec.val_loss);
        if (stopper.improved()) result.params = params;
        if (stop) {
            result.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    result.best_epoch = stopper.best_epoch();
    result.best_val_loss = stopper.best();
    return result;
}

Volume3D infer_volume(const Graph& g, ParamStore& params, const Volume3D& lo, const PatchSpec& spec, int batch_size,
                      const BatchNormState& bn) {
    spec.validate();
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    const Grid& lg = lo.grid();
    const Index3 dims{lg.nx, lg.ny, lg.nz};
    const auto origins = covering_patch_grid(dims, spec);
    const auto hs = spec.high_size();
    Grid hg{lg.nx, lg.ny, lg.nz * spec.k, lg.sx, lg.sy, lg.sz / spec.k};

    std::vector<PlacedPatch> placed;
    placed.reserve(origins.size());
    for (std::size_t start = 0; start < origins.size(); start += std::size_t(batch_size)) {
        const std::size_t end = std::min(origins.size(), start + std::size_t(batch_size));
        Tensor5 x(Shape5{int(end - start), 1, spec.low_size[0], spec.low_size[1], spec.low_size[2]});
        for (std::size_t i = start; i < end; ++i) {
            const auto patch = crop(lo, origins[i], spec.low_size);
            std::copy(patch.begin(), patch.end(), x.channel(int(i - start), 0));
        }
        const Tensor5 pred = forward(g, params, x, false, bn);
        if (pred.shape().x != hs[0] || pred.shape().y != hs[1] || pred.shape().z != hs[2] || pred.shape().c != 1)
            throw DataError("network output " + pred.shape().str() + " does not match the high-field patch size");
        for (std::size_t i = start; i < end; ++i) {
            const double* src = pred.channel(int(i - start), 0);
            PlacedPatch p{{origins[i][0], origins[i][1], origins[i][2] * spec.k}, hs, std::vector<float>(spec.high_voxels())};
            for (std::size_t v = 0; v < p.values.size(); ++v) p.values[v] = float(src[v]);
            placed.push_back(std::move(p));
        }
    }
    return assemble(placed, hg);
}

}  // namespace iqt::nn
