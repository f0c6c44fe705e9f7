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

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "iqt/error.hpp"
#include "iqt/pipeline/commands.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string method;
    bool quiet = false;
};

}  // namespace

int main(int argc, char** argv) {
    using namespace iqt::pipeline;
    CLI::App app{"Low-field MRI image quality transfer pipeline"};
    app.require_subcommand(1, 1);
    Options opt;

    const std::map<std::string, std::string> about{
        {"phantom", "Generate the synthetic high-field cohort"},
        {"simulate", "Simulate low-field volumes from the cohort"},
        {"patchify", "Build paired train/val patch libraries"},
        {"train", "Train the anisotropic U-Net"},
        {"infer", "Upsample evaluation subjects with each method"},
        {"evaluate", "Score methods with PSNR/MSSIM and Wilcoxon tests"},
        {"compare", "Paired Wilcoxon test between two methods"},
    };
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name, about.at(name));
        sub->add_option("--config", opt.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "Workspace directory (overrides config.workspace)");
        sub->add_option("--seed", opt.seed, "Global seed (overrides config.seed)");
        sub->add_flag("-q,--quiet", opt.quiet, "Suppress progress output");
        if (name == "infer")
            sub->add_option("--method", opt.method, "Run only this method")->check(CLI::IsMember({"bspline", "network"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Context ctx;
        ctx.config = RunConfig::load(opt.config);
        if (opt.seed) ctx.config.seed = *opt.seed;
        if (!opt.method.empty()) ctx.config.eval.methods = {opt.method};
        ctx.workspace = opt.out.empty() ? std::filesystem::path(ctx.config.workspace) : std::filesystem::path(opt.out);
        ctx.log = opt.quiet ? nullptr : &std::cout;
        WorkspaceLock lock(ctx.workspace);
        run_command(command, ctx);
    } catch (const std::exception& e) {
        std::cerr << "iqt " << command << ": " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 0;
}
