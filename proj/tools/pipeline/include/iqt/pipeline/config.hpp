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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqt/decimation.hpp"
#include "iqt/metrics.hpp"
#include "iqt/patches.hpp"
#include "iqt/phantom.hpp"
#include "iqt/train.hpp"
#include "iqt/unet.hpp"

namespace iqt::pipeline {

struct CohortSection {
    PhantomConfig phantom;
    int n_subjects = 30;
    std::array<int, 3> split{12, 3, 15};  // train : validation : evaluation
};

enum class SnrModeKind { Fixed, Sampled };

struct SimSection {
    SimConfig sim;  // sim.seed is unused; the stage seed drives the simulator
    SnrPrior prior;
    SnrModeKind mode = SnrModeKind::Fixed;
    SnrSample fixed_snr{61.0, 53.0};
    int realizations = 1;  // low-field volumes per subject
};

struct PatchSection {
    PatchSpec spec;  // spec.k follows sim.k
    int n_aug = 1;
    double subsample_fraction = 0.125;
};

struct EvalSection {
    SsimParams ssim;
    std::optional<double> peak;  // unset: reference maximum
    std::vector<std::string> methods{"bspline", "network"};
    std::string compare_a = "network";
    std::string compare_b = "bspline";
    bool export_pgm = true;
};

/// The whole run configuration. Unknown keys anywhere are rejected.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string workspace = "iqt-run";
    CohortSection phantom;
    SimSection sim;
    PatchSection patches;
    nn::NetworkSpec net;
    nn::TrainConfig train;
    EvalSection eval;

    /// Cross-section checks (matching k, sane counts); throws ConfigError.
    void validate() const;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static RunConfig load(const std::filesystem::path& path);
};

/// Split sizes for n subjects: the floor of each proportional share, the
/// remainder to train, then any empty split borrows one subject from the
/// largest split that can spare it (evaluation first on ties).
std::array<int, 3> split_counts(int n, const std::array<int, 3>& weights);

}  // namespace iqt::pipeline
