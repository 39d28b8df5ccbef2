// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end ELBO training: on-the-fly data generation (sample i of the
// run is a pure function of the run seed), Adam with global-norm clipping,
// the Appendix-style schedules, CSV loss curves and periodic checkpoints.
// Everything an iteration consumes is derived from (run_seed, iteration),
// so a resumed run reproduces the original trajectory bit-for-bit.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

#include <json.hpp>

#include "dive/data/container.hpp"
#include "dive/model/batching.hpp"
#include "dive/model/dive_model.hpp"
#include "dive/train/checkpoint.hpp"
#include "dive/train/schedules.hpp"

namespace dive {

/// Training aborts with this when the objective turns non-finite.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    int scenario = 2;
    std::string glyph_source = "builtin";
    int sequences_per_epoch = 1000;
    int epochs = 20;
    int batch_size = 16;
    double grad_clip = 5.0;
    Schedules schedules;
    std::uint64_t seed = 1;
    int checkpoint_interval = 500;
    ModelConfig model;
    ScenarioConfig data;

    long total_iterations() const {
        return (long(sequences_per_epoch) * epochs) / batch_size;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["scenario"] = scenario;
        j["glyph-source"] = glyph_source;
        j["sequences-per-epoch"] = sequences_per_epoch;
        j["epochs"] = epochs;
        j["batch-size"] = batch_size;
        j["grad-clip"] = grad_clip;
        j["seed"] = seed;
        j["checkpoint-interval"] = checkpoint_interval;
        j["lr"] = schedules.lr_base;
        j["lr-decay-factor"] = schedules.lr_decay_factor;
        j["lr-decay-at-fraction"] = schedules.lr_decay_at_fraction;
        j["p-substitute"] = schedules.p_substitute_train;
        j["p-dynamic-initial"] = schedules.p_dynamic_initial;
        j["p-dynamic-raised"] = schedules.p_dynamic_raised;
        j["p-dynamic-raise-after"] = schedules.p_dynamic_raise_after;
        j["ablation"] = {{"no-missingness", model.no_missingness},
                         {"static-appearance", model.static_appearance},
                         {"soft-labels", model.soft_labels}};
        j["model"] = {{"num-objects", model.num_objects},
                      {"seq-len", model.seq_len},
                      {"input-len", model.input_len},
                      {"frame-size", model.frame_size},
                      {"glimpse-size", model.glimpse_size},
                      {"enc-hidden", model.enc_hidden},
                      {"pose-hidden", model.pose_hidden},
                      {"app-hidden", model.app_hidden},
                      {"app-static", model.app_static},
                      {"app-dynamic", model.app_dynamic},
                      {"z-appearance", model.z_appearance},
                      {"gaussian-likelihood", model.gaussian_likelihood},
                      {"init-seed", model.init_seed}};
        return j;
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        auto get = [&](const char* key, auto fallback) {
            using T = decltype(fallback);
            return j.contains(key) ? j.at(key).get<T>() : fallback;
        };
        c.scenario = get("scenario", c.scenario);
        c.glyph_source = get("glyph-source", c.glyph_source);
        c.sequences_per_epoch = get("sequences-per-epoch", c.sequences_per_epoch);
        c.epochs = get("epochs", c.epochs);
        c.batch_size = get("batch-size", c.batch_size);
        c.grad_clip = get("grad-clip", c.grad_clip);
        c.seed = get("seed", c.seed);
        c.checkpoint_interval = get("checkpoint-interval", c.checkpoint_interval);
        c.schedules.lr_base = get("lr", c.schedules.lr_base);
        c.schedules.lr_decay_factor = get("lr-decay-factor", c.schedules.lr_decay_factor);
        c.schedules.lr_decay_at_fraction =
            get("lr-decay-at-fraction", c.schedules.lr_decay_at_fraction);
        c.schedules.p_substitute_train = get("p-substitute", c.schedules.p_substitute_train);
        c.schedules.p_dynamic_initial = get("p-dynamic-initial", c.schedules.p_dynamic_initial);
        c.schedules.p_dynamic_raised = get("p-dynamic-raised", c.schedules.p_dynamic_raised);
        c.schedules.p_dynamic_raise_after =
            get("p-dynamic-raise-after", c.schedules.p_dynamic_raise_after);
        if (j.contains("ablation")) {
            const auto& a = j.at("ablation");
            if (a.contains("no-missingness")) c.model.no_missingness = a.at("no-missingness");
            if (a.contains("static-appearance"))
                c.model.static_appearance = a.at("static-appearance");
            if (a.contains("soft-labels")) c.model.soft_labels = a.at("soft-labels");
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            auto getm = [&](const char* key, auto fallback) {
                using T = decltype(fallback);
                return m.contains(key) ? m.at(key).get<T>() : fallback;
            };
            c.model.num_objects = getm("num-objects", c.model.num_objects);
            c.model.seq_len = getm("seq-len", c.model.seq_len);
            c.model.input_len = getm("input-len", c.model.input_len);
            c.model.frame_size = getm("frame-size", c.model.frame_size);
            c.model.glimpse_size = getm("glimpse-size", c.model.glimpse_size);
            c.model.enc_hidden = getm("enc-hidden", c.model.enc_hidden);
            c.model.pose_hidden = getm("pose-hidden", c.model.pose_hidden);
            c.model.app_hidden = getm("app-hidden", c.model.app_hidden);
            c.model.app_static = getm("app-static", c.model.app_static);
            c.model.app_dynamic = getm("app-dynamic", c.model.app_dynamic);
            c.model.z_appearance = getm("z-appearance", c.model.z_appearance);
            c.model.gaussian_likelihood =
                getm("gaussian-likelihood", c.model.gaussian_likelihood);
            c.model.init_seed = getm("init-seed", c.model.init_seed);
        }
        return c;
    }

    std::string config_hash() const { return Sha256::of(to_json().dump()); }
};


struct IterationRecord {
    long iteration = 0;
    ElboTerms terms;
    double lr = 0, grad_norm = 0;
};

struct TrainResult {
    std::vector<IterationRecord> records;
    std::string final_checkpoint;
    std::string loss_csv;
    long iterations = 0;
};

/// Mean NELBO over a window of iteration records.
inline double smoothed_nelbo(const std::vector<IterationRecord>& recs, std::size_t end,
                             std::size_t window = 100) {
    const std::size_t lo = end > window ? end - window : 0;
    double acc = 0;
    for (std::size_t i = lo; i < end; ++i) acc += recs[i].terms.nelbo();
    return acc / double(end - lo);
}

template <typename S>
class TrainerT {
public:
    TrainerT(TrainConfig cfg, const GlyphSet& glyphs)
        : cfg_(cfg),
          glyphs_(glyphs),
          model_(cfg.model),
          opt_(model_.params().all()) {
        sync_data_config();
    }

    DiveModelT<S>& model() { return model_; }
    const TrainConfig& config() const { return cfg_; }
    long iteration() const { return iteration_; }

    void load(const std::string& checkpoint_path) {
        std::vector<S> adam_state;
        CheckpointMeta meta = load_checkpoint(checkpoint_path, model_.params(), &adam_state);
        if (!adam_state.empty() && !opt_.restore_state(adam_state, meta.adam_t))
            throw std::runtime_error("checkpoint: optimizer state size mismatch");
        iteration_ = meta.iteration;
    }

    /// Generates the deterministic batch for a 1-based iteration index.
    BatchT<S> make_iteration_batch(long iter) const {
        std::vector<VideoSample> samples;
        samples.reserve(cfg_.batch_size);
        std::vector<const VideoSample*> ptrs;
        for (int b = 0; b < cfg_.batch_size; ++b) {
            const std::uint64_t idx = std::uint64_t(iter - 1) * cfg_.batch_size + b;
            samples.push_back(make_sample(glyphs_, cfg_.data, Scenario(cfg_.scenario),
                                          mix_seed({cfg_.seed, 0xDA7AULL, idx})));
            ptrs.push_back(nullptr);
        }
        for (int b = 0; b < cfg_.batch_size; ++b) ptrs[b] = &samples[b];
        return make_batch<S>(ptrs, cfg_.model, cfg_.data.occlusion_rows);
    }

    /// One optimization step; returns the record for the CSV/curve.
    IterationRecord step() {
        const long iter = ++iteration_;
        const long total = cfg_.total_iterations();
        BatchT<S> batch = make_iteration_batch(iter);

        GraphT<S> g;
        RngNoise<S> noise(Rng(mix_seed({cfg_.seed, 0x401f3ULL, std::uint64_t(iter)})));
        SampleParams sp;
        sp.mode = RunMode::train;
        sp.p_substitute = cfg_.schedules.p_substitute(RunMode::train);
        sp.p_dynamic = cfg_.schedules.p_dynamic(iter, RunMode::train,
                                                cfg_.model.static_appearance);
        auto fwd = model_.forward(g, batch, sp, noise);

        if (!fwd.terms.finite()) {
            throw NumericalError(
                "non-finite objective at iteration " + std::to_string(iter) +
                ": recon_ll=" + std::to_string(fwd.terms.recon_ll) +
                " pred_ll=" + std::to_string(fwd.terms.pred_ll) +
                " kl_pose=" + std::to_string(fwd.terms.kl_pose) +
                " kl_appearance=" + std::to_string(fwd.terms.kl_appearance) +
                " kl_missingness=" + std::to_string(fwd.terms.kl_missingness));
        }

        model_.params().zero_grads();
        g.backward(fwd.loss);

        IterationRecord rec;
        rec.iteration = iter;
        rec.terms = fwd.terms;
        rec.lr = cfg_.schedules.lr(iter, total);
        rec.grad_norm = opt_.step(S(rec.lr), S(cfg_.grad_clip));
        return rec;
    }

    /// Full run with CSV + checkpoint series under `out_dir`.
    TrainResult run(const std::string& out_dir,
                    const std::function<void(const IterationRecord&)>& on_iter = {}) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        TrainResult result;
        result.loss_csv = (fs::path(out_dir) / "loss.csv").string();
        std::ofstream csv(result.loss_csv, iteration_ > 0 ? std::ios::app : std::ios::trunc);
        if (iteration_ == 0)
            csv << "iteration,elbo,recon_ll,pred_ll,kl_pose,kl_appearance,kl_missingness,"
                   "lr,grad_norm\n";

        const long total = cfg_.total_iterations();
        while (iteration_ < total) {
            IterationRecord rec = step();
            result.records.push_back(rec);
            csv << rec.iteration << ',' << rec.terms.total << ',' << rec.terms.recon_ll << ','
                << rec.terms.pred_ll << ',' << rec.terms.kl_pose << ','
                << rec.terms.kl_appearance << ',' << rec.terms.kl_missingness << ',' << rec.lr
                << ',' << rec.grad_norm << '\n';
            csv.flush();
            if (on_iter) on_iter(rec);
            if (cfg_.checkpoint_interval > 0 &&
                (rec.iteration % cfg_.checkpoint_interval == 0 || rec.iteration == total))
                result.final_checkpoint = save(out_dir);
        }
        if (result.final_checkpoint.empty()) result.final_checkpoint = save(out_dir);
        result.iterations = iteration_;
        return result;
    }

    /// Writes ckpt_<iter>.{bin,json}; returns the .bin path.
    std::string save(const std::string& out_dir) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        char name[64];
        std::snprintf(name, sizeof(name), "ckpt_%06ld", iteration_);
        const std::string bin = (fs::path(out_dir) / (std::string(name) + ".bin")).string();
        CheckpointMeta meta{iteration_, opt_.step_count(), cfg_.seed};
        const auto adam = opt_.serialize_state();
        const std::string hash = save_checkpoint<S>(bin, model_.params().all(), meta, &adam);

        nlohmann::json manifest;
        manifest["format"] = "dive-checkpoint-v1";
        manifest["iteration"] = iteration_;
        manifest["run-seed"] = cfg_.seed;
        manifest["config"] = cfg_.to_json();
        manifest["config-hash"] = cfg_.config_hash();
        manifest["params-file"] = std::string(name) + ".bin";
        manifest["params-sha256"] = hash;
        write_manifest((fs::path(out_dir) / (std::string(name) + ".json")).string(), manifest);
        return bin;
    }

private:
    void sync_data_config() {
        cfg_.data.num_objects = cfg_.model.num_objects;
        cfg_.data.seq_len = cfg_.model.seq_len;
        cfg_.data.frame_size = cfg_.model.frame_size;
    }

    TrainConfig cfg_;
    const GlyphSet& glyphs_;
    DiveModelT<S> model_;
    AdamT<S> opt_;
    long iteration_ = 0;
};

using Trainer = TrainerT<float>;

}  // namespace dive
