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

#include "iqt/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "iqt/error.hpp"

namespace iqt::pipeline {

using nlohmann::json;

namespace {

// Reads named keys from one JSON object and reports the rest as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where() + "." + key + ": " + e.what());
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& raw(const char* key) const { return j_.at(key); }
    std::string child(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError("unknown key " + where() + "." + key);
    }

private:
    std::string where() const { return path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_phantom(const json& j, CohortSection& c) {
    Section s(j, "phantom");
    auto& p = c.phantom;
    s.get("n_subjects", c.n_subjects);
    s.get("split", c.split);
    s.get("dims", p.dims);
    s.get("spacing_mm", p.spacing_mm);
    s.get("wm_intensity", p.wm_intensity);
    s.get("gm_intensity", p.gm_intensity);
    s.get("boundary_softness_mm", p.boundary_softness_mm);
    s.get("lesion_count", p.lesion_count);
    s.get("brain_extent", p.brain_extent);
    s.get("wm_fraction", p.wm_fraction);
    s.finish();
}

void read_sim(const json& j, SimSection& c) {
    Section s(j, "sim");
    s.get("k", c.sim.k);
    s.get("sigma_x", c.sim.sigma_x);
    s.get("sigma_y", c.sim.sigma_y);
    s.get("truncation", c.sim.truncation);
    s.get("realizations", c.realizations);
    if (s.has("mode")) {
        std::string mode;
        s.get("mode", mode);
        if (mode == "fixed")
            c.mode = SnrModeKind::Fixed;
        else if (mode == "sampled")
            c.mode = SnrModeKind::Sampled;
        else
            throw ConfigError("sim.mode must be \"fixed\" or \"sampled\", got \"" + mode + "\"");
    }
    if (s.has("fixed_snr")) {
        std::array<double, 2> snr{};
        s.get("fixed_snr", snr);
        c.fixed_snr = {snr[0], snr[1]};
    }
    if (s.has("fwhm")) {
        Section f(s.raw("fwhm"), s.child("fwhm"));
        if (f.has("kind")) {
            std::string kind;
            f.get("kind", kind);
            if (kind == "spacing")
                c.sim.fwhm.kind = FwhmMode::Kind::Spacing;
            else if (kind == "thickness")
                c.sim.fwhm.kind = FwhmMode::Kind::Thickness;
            else
                throw ConfigError("sim.fwhm.kind must be \"spacing\" or \"thickness\", got \"" + kind + "\"");
        }
        f.get("ratio", c.sim.fwhm.ratio);
        f.finish();
    }
    if (s.has("prior")) {
        Section p(s.raw("prior"), s.child("prior"));
        p.get("mu", c.prior.mu);
        p.get("sigma", c.prior.sigma);
        p.finish();
    }
    s.finish();
}

void read_patches(const json& j, PatchSection& c) {
    Section s(j, "patches");
    s.get("low_size", c.spec.low_size);
    s.get("strides", c.spec.strides);
    s.get("background_threshold", c.spec.background_threshold);
    s.get("background_epsilon", c.spec.background_epsilon);
    s.get("n_aug", c.n_aug);
    s.get("subsample_fraction", c.subsample_fraction);
    s.finish();
}

void read_net(const json& j, nn::NetworkSpec& n) {
    Section s(j, "net");
    s.get("k", n.k);
    s.get("base_filters", n.base_filters);
    s.get("levels", n.levels);
    s.get("bb_shrink", n.bb_shrink);
    s.get("rc_depth", n.rc_depth);
    s.finish();
}

void read_train(const json& j, nn::TrainConfig& t) {
    Section s(j, "train");
    s.get("batch_size", t.batch_size);
    s.get("max_epochs", t.max_epochs);
    s.get("patience", t.patience);
    s.get("learning_rate", t.adam.lr0);
    s.get("decay", t.adam.decay);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("epsilon", t.adam.epsilon);
    s.get("bn_momentum", t.bn_momentum);
    s.finish();
}

void read_eval(const json& j, EvalSection& e) {
    Section s(j, "eval");
    if (s.has("ssim")) {
        Section q(s.raw("ssim"), s.child("ssim"));
        q.get("taps", e.ssim.taps);
        q.get("gaussian_sigma", e.ssim.gaussian_sigma);
        q.get("k1", e.ssim.k1);
        q.get("k2", e.ssim.k2);
        if (q.has("dynamic_range") && !q.raw("dynamic_range").is_null()) {
            double r = 0;
            q.get("dynamic_range", r);
            e.ssim.dynamic_range = r;
        }
        q.finish();
    }
    if (s.has("peak") && !s.raw("peak").is_null()) {
        double p = 0;
        s.get("peak", p);
        e.peak = p;
    }
    s.get("methods", e.methods);
    s.get("export_pgm", e.export_pgm);
    if (s.has("compare")) {
        Section c(s.raw("compare"), s.child("compare"));
        c.get("a", e.compare_a);
        c.get("b", e.compare_b);
        c.finish();
    }
    s.finish();
}

}  // namespace

std::array<int, 3> split_counts(int n, const std::array<int, 3>& weights) {
    long total = 0;
    for (int w : weights) {
        if (w < 1) throw ConfigError("split weights must be positive");
        total += w;
    }
    if (n < 3) throw ConfigError("cannot form three nonempty splits from " + std::to_string(n) + " subject(s)");
    std::array<int, 3> c{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        c[std::size_t(i)] = int(long(n) * weights[std::size_t(i)] / total);
        assigned += c[std::size_t(i)];
    }
    c[0] += n - assigned;
    for (int i = 0; i < 3; ++i) {
        if (c[std::size_t(i)] > 0) continue;
        // Donor: the largest split, evaluation before train before validation.
        int donor = -1;
        for (int d : {2, 0, 1})
            if (d != i && c[std::size_t(d)] > 1 && (donor < 0 || c[std::size_t(d)] > c[std::size_t(donor)])) donor = d;
        if (donor < 0) throw ConfigError("cannot form three nonempty splits from " + std::to_string(n) + " subject(s)");
        --c[std::size_t(donor)];
        ++c[std::size_t(i)];
    }
    return c;
}

void RunConfig::validate() const {
    phantom.phantom.validate();
    (void)split_counts(phantom.n_subjects, phantom.split);
    sim.sim.validate();
    if (sim.mode == SnrModeKind::Sampled) sim.prior.validate();
    if (sim.mode == SnrModeKind::Fixed && (!(sim.fixed_snr.snr_wm > 0) || !(sim.fixed_snr.snr_gm > 0)))
        throw ConfigError("sim.fixed_snr entries must be positive");
    if (sim.realizations < 1) throw ConfigError("sim.realizations must be at least 1");
    if (phantom.phantom.dims[2] % sim.sim.k != 0)
        throw ConfigError("phantom depth " + std::to_string(phantom.phantom.dims[2]) + " is not divisible by k=" + std::to_string(sim.sim.k));
    patches.spec.validate();
    if (patches.n_aug < 1 || patches.n_aug > sim.realizations)
        throw ConfigError("patches.n_aug must be between 1 and sim.realizations (" + std::to_string(sim.realizations) + ")");
    if (!(patches.subsample_fraction > 0) || patches.subsample_fraction > 1) throw ConfigError("patches.subsample_fraction must be in (0, 1]");
    net.validate();
    if (net.k != sim.sim.k) throw ConfigError("net.k (" + std::to_string(net.k) + ") differs from sim.k (" + std::to_string(sim.sim.k) + ")");
    train.validate();
    eval.ssim.validate();
    if (eval.peak && !(*eval.peak > 0)) throw ConfigError("eval.peak must be positive");
    for (const auto& m : eval.methods)
        if (m != "bspline" && m != "network") throw ConfigError("unknown method \"" + m + "\" in eval.methods");
    if (eval.methods.empty()) throw ConfigError("eval.methods is empty");
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    Section s(j, "config");
    s.get("seed", c.seed);
    s.get("workspace", c.workspace);
    if (s.has("phantom")) read_phantom(s.raw("phantom"), c.phantom);
    if (s.has("sim")) read_sim(s.raw("sim"), c.sim);
    if (s.has("patches")) read_patches(s.raw("patches"), c.patches);
    if (s.has("net")) read_net(s.raw("net"), c.net);
    if (s.has("train")) read_train(s.raw("train"), c.train);
    if (s.has("eval")) read_eval(s.raw("eval"), c.eval);
    s.finish();
    // The z factor is a property of the acquisition, shared by every stage.
    c.patches.spec.k = c.sim.sim.k;
    c.validate();
    return c;
}

json RunConfig::to_json() const {
    const auto& p = phantom.phantom;
    json out;
    out["seed"] = seed;
    out["workspace"] = workspace;
    out["phantom"] = {{"n_subjects", phantom.n_subjects},
                      {"split", phantom.split},
                      {"dims", p.dims},
                      {"spacing_mm", p.spacing_mm},
                      {"wm_intensity", p.wm_intensity},
                      {"gm_intensity", p.gm_intensity},
                      {"boundary_softness_mm", p.boundary_softness_mm},
                      {"lesion_count", p.lesion_count},
                      {"brain_extent", p.brain_extent},
                      {"wm_fraction", p.wm_fraction}};
    out["sim"] = {{"k", sim.sim.k},
                  {"sigma_x", sim.sim.sigma_x},
                  {"sigma_y", sim.sim.sigma_y},
                  {"truncation", sim.sim.truncation},
                  {"fwhm", {{"kind", sim.sim.fwhm.kind == FwhmMode::Kind::Spacing ? "spacing" : "thickness"}, {"ratio", sim.sim.fwhm.ratio}}},
                  {"mode", sim.mode == SnrModeKind::Fixed ? "fixed" : "sampled"},
                  {"fixed_snr", {sim.fixed_snr.snr_wm, sim.fixed_snr.snr_gm}},
                  {"prior", {{"mu", sim.prior.mu}, {"sigma", sim.prior.sigma}}},
                  {"realizations", sim.realizations}};
    out["patches"] = {{"low_size", patches.spec.low_size},
                      {"strides", patches.spec.strides},
                      {"background_threshold", patches.spec.background_threshold},
                      {"background_epsilon", patches.spec.background_epsilon},
                      {"n_aug", patches.n_aug},
                      {"subsample_fraction", patches.subsample_fraction}};
    out["net"] = {{"k", net.k}, {"base_filters", net.base_filters}, {"levels", net.levels}, {"bb_shrink", net.bb_shrink}, {"rc_depth", net.rc_depth}};
    out["train"] = {{"batch_size", train.batch_size}, {"max_epochs", train.max_epochs}, {"patience", train.patience},
                    {"learning_rate", train.adam.lr0}, {"decay", train.adam.decay},           {"beta1", train.adam.beta1},
                    {"beta2", train.adam.beta2},       {"epsilon", train.adam.epsilon},       {"bn_momentum", train.bn_momentum}};
    json ssim = {{"taps", eval.ssim.taps}, {"gaussian_sigma", eval.ssim.gaussian_sigma}, {"k1", eval.ssim.k1}, {"k2", eval.ssim.k2}};
    ssim["dynamic_range"] = eval.ssim.dynamic_range ? json(*eval.ssim.dynamic_range) : json(nullptr);
    out["eval"] = {{"ssim", ssim},
                   {"peak", eval.peak ? json(*eval.peak) : json(nullptr)},
                   {"methods", eval.methods},
                   {"export_pgm", eval.export_pgm},
                   {"compare", {{"a", eval.compare_a}, {"b", eval.compare_b}}}};
    return out;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

}  // namespace iqt::pipeline
