// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the `dive` executable. Kept in the
// library so tests can drive them in-process. Exit codes: 0 ok, 1 usage,
// 2 data, 3 numerical.

#pragma once

#include <iostream>

#include "dive/data/container.hpp"
#include "dive/eval/ablation.hpp"
#include "dive/eval/harness.hpp"
#include "dive/train/trainer.hpp"
#include "dive/util/manifest.hpp"
#include "dive/util/png.hpp"

namespace dive::cli {

constexpr int kOk = 0, kUsageError = 1, kDataError = 2, kNumericalError = 3;

inline GlyphSet load_glyphs(const std::string& source, const std::string& split,
                            const std::string& mnist_dir) {
    if (source == "builtin") return builtin_glyphs(split, 64);
    if (source == "mnist") {
        const std::string base = mnist_dir.empty() ? data_root() + "/mnist" : mnist_dir;
        if (split == "test")
            return mnist_glyphs(base + "/t10k-images-idx3-ubyte",
                                base + "/t10k-labels-idx1-ubyte");
        return mnist_glyphs(base + "/train-images-idx3-ubyte",
                            base + "/train-labels-idx1-ubyte");
    }
    throw std::invalid_argument("unknown glyph source: " + source);
}

// --- generate-data -------------------------------------------------------

struct GenerateArgs {
    int scenario = 2;
    int count = 1024;
    std::uint64_t seed = 0;
    std::string out;
    std::string glyph_source = "builtin";
    std::string mnist_dir;
    int num_objects = 2;
    int seq_len = 20;
    bool force = false;
};

inline int run_generate(const GenerateArgs& a, std::ostream& log = std::cerr) {
    if (std::filesystem::exists(a.out) && !a.force) {
        log << "error: " << a.out << " exists (use --force to overwrite)\n";
        return kUsageError;
    }
    const Scenario scenario = scenario_from_int(a.scenario);
    GlyphSet glyphs = load_glyphs(a.glyph_source, "test", a.mnist_dir);
    ScenarioConfig cfg;
    cfg.num_objects = a.num_objects;
    cfg.seq_len = a.seq_len;
    write_dataset(a.out, glyphs, cfg, scenario, glyph_source_from_string(a.glyph_source),
                  std::uint32_t(a.count), a.seed);

    RunManifest m;
    m.command = "generate-data";
    m.seed = a.seed;
    m.resolved_config = {{"scenario", a.scenario},       {"count", a.count},
                         {"seed", a.seed},               {"glyph-source", a.glyph_source},
                         {"num-objects", a.num_objects}, {"seq-len", a.seq_len}};
    m.add_artifact(a.out);
    m.write(a.out + ".manifest.json");
    log << "wrote " << a.out << " (" << a.count << " sequences)\n";
    return kOk;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string out_dir = "runs/train";
    std::string resume;  // checkpoint .bin to continue from
    std::string mnist_dir;
    bool quiet = false;
};

inline TrainConfig load_train_config(const std::string& path) {
    if (path.empty()) return TrainConfig{};
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j;
    f >> j;
    return TrainConfig::from_json(j);
}

inline int run_train(const TrainArgs& a, std::ostream& log = std::cerr) {
    TrainConfig cfg = load_train_config(a.config_path);
    GlyphSet glyphs = load_glyphs(cfg.glyph_source, "train", a.mnist_dir);
    Trainer trainer(cfg, glyphs);
    if (!a.resume.empty()) trainer.load(a.resume);

    const long total = cfg.total_iterations();
    auto result = trainer.run(a.out_dir, [&](const IterationRecord& rec) {
        if (!a.quiet && (rec.iteration % 25 == 0 || rec.iteration == 1))
            log << "iter " << rec.iteration << "/" << total << "  nelbo "
                << rec.terms.nelbo() << "  lr " << rec.lr << "\n";
    });

    RunManifest m;
    m.command = "train";
    m.seed = cfg.seed;
    m.resolved_config = cfg.to_json();
    m.add_artifact(result.final_checkpoint);
    m.add_artifact(result.loss_csv);
    m.write((std::filesystem::path(a.out_dir) / "manifest.json").string());
    log << "final checkpoint: " << result.final_checkpoint << "\n";
    return kOk;
}

// --- evaluate --------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;  // .bin (manifest .json sits next to it)
    std::string data;        // DIVE1 container
    std::string out;         // report JSON path
    std::string config_path; // optional; must match the checkpoint's config
    std::string mnist_dir;
};

inline std::string manifest_path_for(const std::string& checkpoint_bin) {
    std::string p = checkpoint_bin;
    const auto dot = p.rfind(".bin");
    if (dot != std::string::npos) p = p.substr(0, dot);
    return p + ".json";
}

inline int run_evaluate(const EvalArgs& a, std::ostream& log = std::cerr) {
    std::ifstream mf(manifest_path_for(a.checkpoint));
    if (!mf) {
        log << "error: missing checkpoint manifest " << manifest_path_for(a.checkpoint)
            << "\n";
        return kDataError;
    }
    nlohmann::json manifest;
    mf >> manifest;
    TrainConfig cfg = TrainConfig::from_json(manifest.at("config"));
    if (!a.config_path.empty()) {
        TrainConfig requested = load_train_config(a.config_path);
        if (requested.config_hash() != cfg.config_hash()) {
            log << "error: config hash mismatch\n  checkpoint: " << cfg.config_hash()
                << "\n  requested:  " << requested.config_hash() << "\n";
            return kUsageError;
        }
    }

    DiveModel model(cfg.model);
    load_checkpoint<float>(a.checkpoint, model.params(), nullptr);

    ContainerReader data(a.data);
    GlyphSet glyphs =
        load_glyphs(to_string(data.header().glyph_source), "test", a.mnist_dir);
    MetricsReport rep = evaluate(model, data, glyphs);
    rep.config_hash = cfg.config_hash();
    rep.checkpoint_sha256 = Sha256::of_file(a.checkpoint);
    rep.dataset_sha256 = Sha256::of_file(a.data);

    {
        const std::string tmp = a.out + ".tmp";
        std::ofstream f(tmp);
        f << rep.to_json().dump(2) << "\n";
        f.close();
        std::filesystem::rename(tmp, a.out);
    }
    RunManifest m;
    m.command = "evaluate";
    m.seed = data.header().base_seed;
    m.resolved_config = {{"checkpoint", a.checkpoint},
                         {"data", a.data},
                         {"config-hash", rep.config_hash}};
    m.add_artifact(a.out);
    m.write(a.out + ".manifest.json");
    log << "report: " << a.out << "\n";
    return kOk;
}

// --- ablate ----------------------------------------------------------------

struct AblateArgs {
    std::string config_path;
    std::string data;     // frozen test container for the comparison
    std::string out_dir = "runs/ablate";
    std::vector<std::string> flags;  // e.g. {"no-missingness"}
    std::string mnist_dir;
    bool quiet = false;
};

/// Trains base + one run per ablation flag, evaluates all on the same
/// container and writes the comparison table.
inline int run_ablate(const AblateArgs& a, std::ostream& log = std::cerr) {
    TrainConfig base = load_train_config(a.config_path);
    std::vector<std::pair<std::string, TrainConfig>> variants;
    variants.emplace_back("base", base);
    for (const std::string& flag : a.flags) {
        TrainConfig c = base;
        if (flag == "no-missingness")
            c.model.no_missingness = true;
        else if (flag == "static-appearance")
            c.model.static_appearance = true;
        else if (flag == "soft-labels")
            c.model.soft_labels = true;
        else
            throw std::invalid_argument("unknown ablation flag: " + flag);
        variants.emplace_back(flag, c);
    }

    std::vector<AblationEntry> entries;
    for (auto& [name, cfg] : variants) {
        const std::string run_dir = (std::filesystem::path(a.out_dir) / name).string();
        log << "=== ablation run: " << name << "\n";
        GlyphSet glyphs = load_glyphs(cfg.glyph_source, "train", a.mnist_dir);
        Trainer trainer(cfg, glyphs);
        auto result = trainer.run(run_dir, [&](const IterationRecord& rec) {
            if (!a.quiet && rec.iteration % 50 == 0)
                log << "  iter " << rec.iteration << "  nelbo " << rec.terms.nelbo() << "\n";
        });
        ContainerReader data(a.data);
        GlyphSet test_glyphs =
            load_glyphs(to_string(data.header().glyph_source), "test", a.mnist_dir);
        MetricsReport rep = evaluate(trainer.model(), data, test_glyphs);
        rep.config_hash = cfg.config_hash();
        rep.checkpoint_sha256 = Sha256::of_file(result.final_checkpoint);
        rep.dataset_sha256 = Sha256::of_file(a.data);
        std::ofstream rf((std::filesystem::path(run_dir) / "report.json").string());
        rf << rep.to_json().dump(2) << "\n";
        entries.push_back({name, rep});
    }

    auto cmp = compare_ablations(entries);
    std::filesystem::create_directories(a.out_dir);
    const std::string csv = (std::filesystem::path(a.out_dir) / "comparison.csv").string();
    {
        std::ofstream f(csv);
        f << cmp.to_csv();
    }
    const std::string txt = (std::filesystem::path(a.out_dir) / "comparison.txt").string();
    {
        std::ofstream f(txt);
        f << cmp.to_text();
    }
    log << cmp.to_text();

    RunManifest m;
    m.command = "ablate";
    m.seed = base.seed;
    m.resolved_config = base.to_json();
    m.resolved_config["flags"] = a.flags;
    m.add_artifact(csv);
    m.add_artifact(txt);
    m.write((std::filesystem::path(a.out_dir) / "manifest.json").string());
    return kOk;
}

// --- render ------------------------------------------------------------------

struct RenderArgs {
    std::string checkpoint;
    std::string data;
    std::vector<int> indices{0};
    std::string out_dir = "renders";
    std::string mnist_dir;
};

/// Figure-style grid per index: ground truth, per-object generations, the
/// composed output and the missing-label strip, one column per step.
inline int run_render(const RenderArgs& a, std::ostream& log = std::cerr) {
    std::ifstream mf(manifest_path_for(a.checkpoint));
    if (!mf) {
        log << "error: missing checkpoint manifest\n";
        return kDataError;
    }
    nlohmann::json manifest;
    mf >> manifest;
    TrainConfig cfg = TrainConfig::from_json(manifest.at("config"));
    DiveModel model(cfg.model);
    load_checkpoint<float>(a.checkpoint, model.params(), nullptr);

    ContainerReader data(a.data);
    const auto& hdr = data.header();
    const int F = cfg.model.frame_size, T = cfg.model.seq_len, K = cfg.model.input_len;
    const int N = cfg.model.num_objects;
    std::filesystem::create_directories(a.out_dir);

    RunManifest m;
    m.command = "render";
    m.seed = hdr.base_seed;
    m.resolved_config = {{"checkpoint", a.checkpoint}, {"data", a.data}};

    for (int index : a.indices) {
        StoredSample s = data.read(std::uint32_t(index));
        std::vector<const StoredSample*> ptrs{&s};
        BatchT<float> batch = make_batch<float>(ptrs, hdr.scenario, cfg.model);
        GraphT<float> g;
        MeanNoise<float> noise;
        SampleParams sp;
        sp.mode = RunMode::eval;
        sp.p_substitute = 0.0;
        sp.p_dynamic = 1.0;
        auto fwd = model.forward(g, batch, sp, noise);

        const int margin = 44, gap = 2;
        const int rows = 3 + N;
        GrayCanvas canvas(margin + T * (F + gap), rows * (F + gap), 16);
        auto row_y = [&](int r) { return r * (F + gap); };

        draw_label(canvas, "GT", 2, row_y(0) + F / 2 - 4);
        for (int i = 0; i < N; ++i)
            draw_label(canvas, "OBJ " + std::to_string(i + 1), 2, row_y(1 + i) + F / 2 - 4);
        draw_label(canvas, "DIVE", 2, row_y(1 + N) + F / 2 - 4);
        draw_label(canvas, "MISS", 2, row_y(2 + N) + F / 2 - 4);

        std::vector<float> tmp(F * F);
        for (int t = 0; t < T; ++t) {
            const int x0 = margin + t * (F + gap);
            // ground truth: corrupted input, then the true future
            const float* gt = (t < K ? &s.corrupted[std::size_t(t) * F * F]
                                     : &s.complete[std::size_t(t) * F * F]);
            canvas.blit(gt, F, F, x0, row_y(0));
            for (int i = 0; i < N; ++i) {
                const auto& cv = g.val(fwd.contrib[i][t]);
                for (int p = 0; p < F * F; ++p) tmp[p] = cv(0, p);
                canvas.blit(tmp.data(), F, F, x0, row_y(1 + i));
            }
            const auto& fv = t < K ? g.val(fwd.recon[t]) : g.val(fwd.pred[t - K]);
            for (int p = 0; p < F * F; ++p) tmp[p] = fv(0, p);
            canvas.blit(tmp.data(), F, F, x0, row_y(1 + N));
            // missing labels: one block per object; prediction steps are
            // complete by assumption and drawn dark
            const int block = F / N;
            for (int i = 0; i < N; ++i) {
                const bool missing = t < K && fwd.z_m[i][t][0] != 0;
                for (int y = 0; y < block - 4; ++y)
                    for (int x = 0; x < F; ++x)
                        canvas.set(x0 + x, row_y(2 + N) + i * block + y + 2,
                                   missing ? 230 : 48);
            }
        }
        const std::string out =
            (std::filesystem::path(a.out_dir) / ("sample_" + std::to_string(index) + ".png"))
                .string();
        write_png(out, canvas);
        m.add_artifact(out);
        log << "rendered " << out << "\n";
    }
    m.write((std::filesystem::path(a.out_dir) / "manifest.json").string());
    return kOk;
}

}  // namespace dive::cli
