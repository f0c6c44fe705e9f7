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

#include "iqt/pipeline/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include <unistd.h>

#include "iqt/bspline.hpp"
#include "iqt/error.hpp"
#include "iqt/params.hpp"
#include "iqt/pipeline/pgm.hpp"
#include "iqt/rng.hpp"

namespace iqt::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
const char* const kSplitNames[3] = {"train", "val", "eval"};

fs::path cohort_dir(const Context& c) { return c.workspace / "cohort"; }
fs::path lowfield_dir(const Context& c) { return c.workspace / "lowfield"; }
fs::path patches_dir(const Context& c) { return c.workspace / "patches"; }
fs::path model_dir(const Context& c) { return c.workspace / "model"; }
fs::path infer_dir(const Context& c) { return c.workspace / "infer"; }
fs::path eval_dir(const Context& c) { return c.workspace / "eval"; }

std::string subject_name(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "subject_%02d", id);
    return buf;
}

std::string realization_name(int id, int r) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "subject_%02d.r%02d", id, r);
    return buf;
}

void say(const Context& c, const std::string& line) {
    if (c.log) *c.log << line << '\n' << std::flush;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError(FormatError::Kind::Unwritable, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw FormatError(FormatError::Kind::Unwritable, "write failed for " + path.string());
}

json read_json(const fs::path& path, const char* producer) {
    std::ifstream in(path);
    if (!in) throw DataError("missing artifact " + path.string() + " (run `iqt " + producer + "` first)");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("corrupt artifact " + path.string() + ": " + e.what());
    }
}

// Clears and recreates a stage output directory so reruns leave no stale files.
fs::path fresh_dir(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json snr_json(const SnrSample& s) { return {{"wm", s.snr_wm}, {"gm", s.snr_gm}}; }

json psnr_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

double psnr_from_json(const json& j) {
    if (j.is_string() && j.get<std::string>() == "inf") return kPsnrIdentical;
    return j.get<double>();
}

struct Subject {
    int id = 0;
    std::string split;
};

std::vector<Subject> cohort_subjects(const Context& c, const std::string& split = "") {
    const json cohort = read_json(cohort_dir(c) / "cohort.json", "phantom");
    std::vector<Subject> out;
    for (const auto& s : cohort.at("subjects")) {
        Subject sub{s.at("id").get<int>(), s.at("split").get<std::string>()};
        if (split.empty() || sub.split == split) out.push_back(sub);
    }
    if (out.empty()) throw DataError("cohort has no subjects in split \"" + split + "\"");
    return out;
}

Volume3D high_field(const Context& c, int id) { return load_scalar_volume(cohort_dir(c) / (subject_name(id) + ".image.iqtv")); }

Volume3D low_field(const Context& c, int id, int r, bool clean) {
    const auto name = realization_name(id, r) + (clean ? ".clean.iqtv" : ".iqtv");
    const auto path = lowfield_dir(c) / name;
    if (!fs::exists(path)) throw DataError("missing artifact " + path.string() + " (run `iqt simulate` first)");
    return load_scalar_volume(path);
}

json provenance(const Context& c, const char* stage) {
    return {{"seed", c.config.seed}, {"stage", stage}, {"stage_seed", stage_seed(c.config.seed, stage)}};
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

// Population standard deviation over subjects.
double pop_std(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / double(v.size()));
}

json wilcoxon_json(const std::vector<double>& x, const std::vector<double>& y) {
    const auto w = wilcoxon_signed_rank(x, y);
    double diff = 0;
    for (std::size_t i = 0; i < x.size(); ++i) diff += x[i] - y[i];
    return {{"n", w.n},
            {"w_plus", w.w_plus},
            {"w_minus", w.w_minus},
            {"statistic", w.statistic},
            {"p_value", w.p_value},
            {"exact", w.exact},
            {"mean_difference", diff / double(x.size())}};
}

}  // namespace

void cmd_phantom(const Context& ctx) {
    const auto& cfg = ctx.config.phantom;
    const auto counts = split_counts(cfg.n_subjects, cfg.split);
    const std::uint64_t seed = stage_seed(ctx.config.seed, "phantom");
    auto cohort = generate_cohort(cfg.n_subjects, cfg.phantom, seed);

    float peak = 0;
    for (const auto& p : cohort)
        for (float v : p.image.data()) peak = std::max(peak, v);
    if (!(peak > 0)) throw NumericError("phantom cohort is entirely zero; cannot normalise");
    for (auto& p : cohort)
        for (float& v : p.image.data()) v /= peak;

    const auto dir = fresh_dir(cohort_dir(ctx));
    json subjects = json::array();
    int id = 0;
    for (int split = 0; split < 3; ++split)
        for (int i = 0; i < counts[std::size_t(split)]; ++i, ++id) {
            const auto name = subject_name(id);
            save_volume(cohort[std::size_t(id)].image, dir / (name + ".image.iqtv"));
            save_volume(cohort[std::size_t(id)].masks, dir / (name + ".masks.iqtv"));
            const auto sc = cohort_subject_config(cfg.phantom, seed, id);
            subjects.push_back({{"id", id},
                                {"split", kSplitNames[split]},
                                {"image", name + ".image.iqtv"},
                                {"masks", name + ".masks.iqtv"},
                                {"wm_intensity", sc.wm_intensity},
                                {"gm_intensity", sc.gm_intensity},
                                {"seed", sc.seed}});
        }
    write_json(dir / "cohort.json", {{"format", "iqt-cohort"},
                                     {"version", kFormatVersion},
                                     {"provenance", provenance(ctx, "phantom")},
                                     {"config", ctx.config.to_json()["phantom"]},
                                     {"split_counts", {{"train", counts[0]}, {"val", counts[1]}, {"eval", counts[2]}}},
                                     {"normalization", {{"method", "cohort_max"}, {"scale", double(peak)}}},
                                     {"subjects", subjects}});
    say(ctx, "phantom: " + std::to_string(cfg.n_subjects) + " subjects (train " + std::to_string(counts[0]) + ", val " +
                 std::to_string(counts[1]) + ", eval " + std::to_string(counts[2]) + ")");
}

void cmd_simulate(const Context& ctx) {
    const auto& cfg = ctx.config.sim;
    const auto subjects = cohort_subjects(ctx);
    const std::uint64_t seed = stage_seed(ctx.config.seed, "simulate");
    SnrMode mode = cfg.mode == SnrModeKind::Fixed ? SnrMode(FixedSnr{cfg.fixed_snr}) : SnrMode(SampledSnr{cfg.prior});

    struct Realization {
        int subject, r;
        SimulationResult res;
    };
    std::vector<Realization> runs;
    float peak = 0;
    for (const auto& s : subjects) {
        const auto hi = high_field(ctx, s.id);
        const auto masks = load_masks(cohort_dir(ctx) / (subject_name(s.id) + ".masks.iqtv"));
        for (int r = 0; r < cfg.realizations; ++r) {
            Rng rng(derive_seed(derive_seed(seed, std::uint64_t(s.id)), std::uint64_t(r)));
            auto res = simulate_low_field(hi, masks, cfg.sim, mode, rng);
            for (float v : res.noisy.data()) peak = std::max(peak, v);
            runs.push_back({s.id, r, std::move(res)});
        }
    }
    // Low-field volumes share one cohort-wide scale, as the high-field ones do.
    if (!(peak > 0)) throw NumericError("simulated low-field cohort has no positive intensity; cannot normalise");

    const auto dir = fresh_dir(lowfield_dir(ctx));
    json volumes = json::array();
    for (auto& [id, r, res] : runs) {
        for (float& v : res.noisy.data()) v /= peak;
        for (float& v : res.clean.data()) v /= peak;
        const auto name = realization_name(id, r);
        save_volume(res.noisy, dir / (name + ".iqtv"));
        save_volume(res.clean, dir / (name + ".clean.iqtv"));
        volumes.push_back({{"subject", id},
                           {"realization", r},
                           {"file", name + ".iqtv"},
                           {"clean_file", name + ".clean.iqtv"},
                           {"dims", {res.noisy.nx(), res.noisy.ny(), res.noisy.nz()}},
                           {"snr_low", snr_json(res.snr_low)},
                           {"snr_high", snr_json(res.snr_high)}});
    }
    write_json(dir / "simulation.json", {{"format", "iqt-simulation"},
                                         {"version", kFormatVersion},
                                         {"provenance", provenance(ctx, "simulate")},
                                         {"config", ctx.config.to_json()["sim"]},
                                         {"normalization", {{"method", "cohort_max"}, {"scale", double(peak)}}},
                                         {"volumes", volumes}});
    say(ctx, "simulate: " + std::to_string(volumes.size()) + " low-field volumes");
}

void cmd_patchify(const Context& ctx) {
    const auto& cfg = ctx.config.patches;
    const std::uint64_t seed = stage_seed(ctx.config.seed, "patchify");
    const auto sim = read_json(lowfield_dir(ctx) / "simulation.json", "simulate");
    if (sim.at("config").at("realizations").get<int>() < cfg.n_aug)
        throw DataError("simulation has fewer realizations than patches.n_aug; rerun `iqt simulate`");
    if (sim.at("config").at("k").get<int>() != cfg.spec.k) throw DataError("simulation k differs from the configured k; rerun `iqt simulate`");

    const auto root = fresh_dir(patches_dir(ctx));
    for (int split = 0; split < 2; ++split) {
        std::vector<PatchLibrary> parts;
        json ids = json::array();
        for (const auto& s : cohort_subjects(ctx, kSplitNames[split])) {
            const auto hi = high_field(ctx, s.id);
            const auto clean = low_field(ctx, s.id, 0, true);
            for (int r = 0; r < cfg.n_aug; ++r) {
                auto lib = extract_pairs(low_field(ctx, s.id, r, false), hi, cfg.spec, &clean, s.id, r);
                lib.n_aug = 1;
                parts.push_back(std::move(lib));
            }
            ids.push_back(s.id);
        }
        auto merged = merge_libraries(std::move(parts));
        merged.n_aug = cfg.n_aug;
        const std::size_t before = merged.pairs.size();
        Rng rng(derive_seed(seed, std::uint64_t(split)));
        auto lib = subsample(merged, cfg.subsample_fraction, rng);
        if (lib.pairs.empty())
            throw DataError(std::string("no ") + kSplitNames[split] + " patches survive extraction and subsampling");
        json prov = provenance(ctx, "patchify");
        prov["subjects"] = ids;
        prov["pairs_before_subsample"] = before;
        prov["subsample_fraction"] = cfg.subsample_fraction;
        save_library(lib, root / kSplitNames[split], 64, prov);
        say(ctx, std::string("patchify: ") + kSplitNames[split] + " " + std::to_string(lib.pairs.size()) + " pairs (of " +
                     std::to_string(before) + ")");
    }
}

void cmd_train(const Context& ctx) {
    const auto train_lib = load_library(patches_dir(ctx) / "train");
    const auto val_lib = load_library(patches_dir(ctx) / "val");
    const std::uint64_t seed = stage_seed(ctx.config.seed, "train");
    const auto g = nn::build_network(ctx.config.net);
    nn::ParamStore params;
    Rng init(derive_seed(seed, 0));
    g.init_params(params, init);
    auto tc = ctx.config.train;
    tc.seed = derive_seed(seed, 1);

    json timing = json::array();
    const auto result = nn::train(g, params, train_lib, val_lib, tc, [&](const nn::EpochRecord& e) {
        timing.push_back({{"epoch", e.epoch}, {"seconds", e.seconds}});
        char line[160];
        std::snprintf(line, sizeof line, "train: epoch %d  train %.6g  val %.6g  lr %.4g  (%.1fs)", e.epoch, e.train_loss, e.val_loss,
                      e.learning_rate, e.seconds);
        say(ctx, line);
    });

    const auto dir = fresh_dir(model_dir(ctx));
    json net;
    nn::to_json(net, ctx.config.net);
    nn::save_params(result.params, dir / "checkpoint", {{"network", net}, {"graph", g.to_json()}});
    json epochs = json::array();
    for (const auto& e : result.history)
        epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"learning_rate", e.learning_rate}});
    write_json(dir / "history.json", {{"format", "iqt-history"},
                                      {"version", kFormatVersion},
                                      {"provenance", provenance(ctx, "train")},
                                      {"config", ctx.config.to_json()["train"]},
                                      {"network", net},
                                      {"parameters", g.parameter_count()},
                                      {"train_pairs", train_lib.pairs.size()},
                                      {"val_pairs", val_lib.pairs.size()},
                                      {"epochs", epochs},
                                      {"best_epoch", result.best_epoch},
                                      {"best_val_loss", result.best_val_loss},
                                      {"stopped_early", result.stopped_early}});
    fs::create_directories(ctx.workspace / "logs");
    write_json(ctx.workspace / "logs" / "train.epochs.json", {{"command", "train"}, {"epochs", timing}});
    say(ctx, "train: best epoch " + std::to_string(result.best_epoch));
}

void cmd_infer(const Context& ctx) {
    const auto subjects = cohort_subjects(ctx, "eval");
    const int k = ctx.config.sim.sim.k;
    for (const auto& method : ctx.config.eval.methods) {
        const auto dir = fresh_dir(infer_dir(ctx) / method);
        std::optional<nn::LoadedParams> model;
        std::optional<nn::Graph> graph;
        if (method == "network") {
            const auto ckpt = model_dir(ctx) / "checkpoint";
            if (!fs::exists(ckpt / "manifest.json")) throw DataError("missing artifact " + ckpt.string() + " (run `iqt train` first)");
            model = nn::load_params(ckpt);
            graph = nn::Graph::from_json(model->graph.at("graph"));
            if (model->graph.at("network").at("k").get<int>() != k) throw DataError("checkpoint was trained for a different k");
        }
        json entries = json::array();
        for (const auto& s : subjects) {
            const auto lo = low_field(ctx, s.id, 0, false);
            const Volume3D out = method == "bspline" ? upsample_z_bspline(lo, k)
                                                    : nn::infer_volume(*graph, model->store, lo, ctx.config.patches.spec, 8,
                                                                       {1e-3, ctx.config.train.bn_momentum});
            const auto name = subject_name(s.id) + ".iqtv";
            save_volume(out, dir / name);
            entries.push_back({{"subject", s.id}, {"file", name}, {"source", realization_name(s.id, 0) + ".iqtv"}});
        }
        write_json(dir / "manifest.json", {{"format", "iqt-inference"},
                                           {"version", kFormatVersion},
                                           {"provenance", provenance(ctx, "infer")},
                                           {"method", method},
                                           {"k", k},
                                           {"subjects", entries}});
        say(ctx, "infer: " + method + " on " + std::to_string(subjects.size()) + " subjects");
    }
}

void cmd_evaluate(const Context& ctx) {
    const auto& cfg = ctx.config.eval;
    const auto subjects = cohort_subjects(ctx, "eval");
    const auto dir = fresh_dir(eval_dir(ctx));
    if (cfg.export_pgm) fs::create_directories(dir / "pgm");

    std::map<int, Volume3D> refs;
    for (const auto& s : subjects) {
        refs.emplace(s.id, high_field(ctx, s.id));
        if (cfg.export_pgm) {
            const auto& ref = refs.at(s.id);
            const double hi = *std::max_element(ref.data().begin(), ref.data().end());
            const auto base = dir / "pgm" / subject_name(s.id);
            write_mid_slice_pgm(ref, SlicePlane::Axial, 0, hi, base.string() + ".reference.axial.pgm");
            write_mid_slice_pgm(ref, SlicePlane::Coronal, 0, hi, base.string() + ".reference.coronal.pgm");
            write_mid_slice_pgm(low_field(ctx, s.id, 0, false), SlicePlane::Coronal, 0, hi, base.string() + ".lowfield.coronal.pgm");
        }
    }
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> scores;
    json aggregates = json::object();
    for (const auto& method : cfg.methods) {
        const auto manifest = read_json(infer_dir(ctx) / method / "manifest.json", "infer");
        std::map<int, std::string> files;
        for (const auto& e : manifest.at("subjects")) files[e.at("subject").get<int>()] = e.at("file").get<std::string>();
        json rows = json::array();
        std::vector<double> psnrs, mssims;
        for (const auto& s : subjects) {
            if (!files.count(s.id)) throw DataError("inference for " + method + " lacks " + subject_name(s.id) + "; rerun `iqt infer`");
            const auto test = load_scalar_volume(infer_dir(ctx) / method / files.at(s.id));
            const auto& ref = refs.at(s.id);
            if (!ref.grid().same_shape(test.grid())) throw DataError(method + " output for " + subject_name(s.id) + " has the wrong dimensions");
            const double p = psnr(ref, test, cfg.peak);
            const double m = mssim(ref, test, cfg.ssim);
            psnrs.push_back(p);
            mssims.push_back(m);
            rows.push_back({{"subject", s.id}, {"psnr", psnr_json(p)}, {"mssim", m}});
            if (cfg.export_pgm) {
                const double hi = *std::max_element(ref.data().begin(), ref.data().end());
                const auto base = (dir / "pgm" / subject_name(s.id)).string() + "." + method;
                write_mid_slice_pgm(test, SlicePlane::Axial, 0, hi, base + ".axial.pgm");
                write_mid_slice_pgm(test, SlicePlane::Coronal, 0, hi, base + ".coronal.pgm");
            }
        }
        const json aggregate = {{"n", rows.size()},
                                {"psnr_mean", psnr_json(mean_of(psnrs))},
                                {"psnr_std", std::isinf(mean_of(psnrs)) ? json(nullptr) : json(pop_std(psnrs))},
                                {"mssim_mean", mean_of(mssims)},
                                {"mssim_std", pop_std(mssims)}};
        aggregates[method] = aggregate;
        write_json(dir / (method + ".json"), {{"format", "iqt-metrics"},
                                              {"version", kFormatVersion},
                                              {"provenance", provenance(ctx, "evaluate")},
                                              {"method", method},
                                              {"peak", cfg.peak ? json(*cfg.peak) : json("reference_max")},
                                              {"subjects", rows},
                                              {"aggregate", aggregate}});
        char line[160];
        std::snprintf(line, sizeof line, "evaluate: %s  PSNR %.3f dB  MSSIM %.4f", method.c_str(), mean_of(psnrs), mean_of(mssims));
        say(ctx, line);
        scores[method] = {std::move(psnrs), std::move(mssims)};
    }

    // Pairwise tests between every two methods; a pair whose differences are all
    // zero records the error instead of failing the whole evaluation.
    json pairs = json::array();
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.methods.size(); ++j) {
            const auto& a = scores.at(cfg.methods[i]);
            const auto& b = scores.at(cfg.methods[j]);
            json entry = {{"method_a", cfg.methods[i]}, {"method_b", cfg.methods[j]}};
            for (const auto& [metric, pick] : {std::pair{"psnr", 0}, std::pair{"mssim", 1}}) {
                try {
                    entry[metric] = pick == 0 ? wilcoxon_json(a.first, b.first) : wilcoxon_json(a.second, b.second);
                } catch (const DataError& e) {
                    entry[metric] = {{"error", e.what()}};
                } catch (const NumericError& e) {
                    entry[metric] = {{"error", e.what()}};
                }
            }
            pairs.push_back(entry);
        }
    write_json(dir / "summary.json", {{"format", "iqt-eval-summary"},
                                      {"version", kFormatVersion},
                                      {"provenance", provenance(ctx, "evaluate")},
                                      {"subjects", subjects.size()},
                                      {"methods", aggregates},
                                      {"wilcoxon", pairs}});
}

void cmd_compare(const Context& ctx) {
    const auto& cfg = ctx.config.eval;
    const auto a = read_json(eval_dir(ctx) / (cfg.compare_a + ".json"), "evaluate");
    const auto b = read_json(eval_dir(ctx) / (cfg.compare_b + ".json"), "evaluate");
    std::map<int, json> rows_b;
    for (const auto& r : b.at("subjects")) rows_b[r.at("subject").get<int>()] = r;
    std::vector<double> pa, pb, ma, mb;
    for (const auto& r : a.at("subjects")) {
        const int id = r.at("subject").get<int>();
        if (!rows_b.count(id)) throw DataError("subject " + std::to_string(id) + " is missing from " + cfg.compare_b + " metrics");
        pa.push_back(psnr_from_json(r.at("psnr")));
        pb.push_back(psnr_from_json(rows_b.at(id).at("psnr")));
        ma.push_back(r.at("mssim").get<double>());
        mb.push_back(rows_b.at(id).at("mssim").get<double>());
    }
    if (pa.size() != rows_b.size()) throw DataError("metric files cover different subjects");
    const json out = {{"format", "iqt-compare"},
                      {"version", kFormatVersion},
                      {"provenance", provenance(ctx, "compare")},
                      {"method_a", cfg.compare_a},
                      {"method_b", cfg.compare_b},
                      {"subjects", pa.size()},
                      {"tests", {{"psnr", wilcoxon_json(pa, pb)}, {"mssim", wilcoxon_json(ma, mb)}}}};
    fresh_dir(ctx.workspace / "compare");
    write_json(ctx.workspace / "compare" / "compare.json", out);
    char line[200];
    std::snprintf(line, sizeof line, "compare: %s vs %s  PSNR p=%.4g  MSSIM p=%.4g", cfg.compare_a.c_str(), cfg.compare_b.c_str(),
                  out["tests"]["psnr"]["p_value"].get<double>(), out["tests"]["mssim"]["p_value"].get<double>());
    say(ctx, line);
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"phantom", "simulate", "patchify", "train", "infer", "evaluate", "compare"};
    return names;
}

void run_command(const std::string& name, const Context& ctx) {
    using Fn = void (*)(const Context&);
    static const std::map<std::string, Fn> table{{"phantom", cmd_phantom}, {"simulate", cmd_simulate}, {"patchify", cmd_patchify},
                                                 {"train", cmd_train},     {"infer", cmd_infer},       {"evaluate", cmd_evaluate},
                                                 {"compare", cmd_compare}};
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown command \"" + name + "\"");
    const auto t0 = std::chrono::steady_clock::now();
    it->second(ctx);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fs::create_directories(ctx.workspace / "logs");
    write_json(ctx.workspace / "logs" / (name + ".json"), {{"command", name}, {"seconds", seconds}});
}

WorkspaceLock::WorkspaceLock(const fs::path& dir) : path_(dir / ".iqt.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FormatError(FormatError::Kind::Unwritable, "cannot create workspace " + dir.string() + ": " + ec.message());
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
        if (fs::exists(path_))
            throw DataError("workspace " + dir.string() + " is in use by another run (delete " + path_.string() + " if it is stale)");
        throw FormatError(FormatError::Kind::Unwritable, "cannot create lock file " + path_.string());
    }
    std::fprintf(f, "%ld\n", long(::getpid()));
    std::fclose(f);
}

WorkspaceLock::~WorkspaceLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    if (dynamic_cast<const NumericError*>(&e)) return 4;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
    return 1;
}

}  // namespace iqt::pipeline
