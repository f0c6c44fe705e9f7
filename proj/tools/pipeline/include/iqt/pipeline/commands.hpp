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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "iqt/pipeline/config.hpp"

namespace iqt::pipeline {

// Workspace layout, relative to the workspace root:
//   cohort/    subject_NN.image.iqtv, subject_NN.masks.iqtv, cohort.json
//   lowfield/  subject_NN.rRR.iqtv, subject_NN.rRR.clean.iqtv, simulation.json
//   patches/   train/, val/ (patch libraries)
//   model/     checkpoint/, history.json
//   infer/     <method>/subject_NN.iqtv, <method>/manifest.json
//   eval/      <method>.json, pgm/*.pgm
//   compare/   compare.json
//   logs/      <command>.json (wall-clock timings; the only nondeterministic files)

struct Context {
    RunConfig config;
    std::filesystem::path workspace;
    std::ostream* log = nullptr;  // progress lines; null for silence
};

void cmd_phantom(const Context& ctx);
void cmd_simulate(const Context& ctx);
void cmd_patchify(const Context& ctx);
void cmd_train(const Context& ctx);
void cmd_infer(const Context& ctx);
void cmd_evaluate(const Context& ctx);
void cmd_compare(const Context& ctx);

const std::vector<std::string>& command_names();

/// Dispatches by name; throws ConfigError for an unknown command.
void run_command(const std::string& name, const Context& ctx);

/// Exclusive claim on a workspace: creates <dir>/.iqt.lock or throws DataError
/// if it already exists. Removed on destruction.
class WorkspaceLock {
public:
    explicit WorkspaceLock(const std::filesystem::path& dir);
    ~WorkspaceLock();
    WorkspaceLock(const WorkspaceLock&) = delete;
    WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Exit status for an exception escaping a command: 2 config, 3 data, 4 numeric, 1 otherwise.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace iqt::pipeline
