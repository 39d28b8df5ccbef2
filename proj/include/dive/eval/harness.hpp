// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic checkpoint evaluation on a frozen test container.
// Sampling is replaced by posterior means (z_m stays hard), reconstruction
// metrics run on visible pixels against the corrupted input, prediction
// metrics against the complete future. Missingness quality is balanced
// accuracy after greedy object matching on rendered-mass overlap.

#pragma once

#include <json.hpp>

#include "dive/data/container.hpp"
#include "dive/eval/metrics.hpp"
#include "dive/model/batching.hpp"
#include "dive/model/dive_model.hpp"

namespace dive {

struct MetricsReport {
    // Table-1 schema: {BCE, MSE, PSNR, SSIM} x {rec, pred} + NELBO
    double bce_rec = 0, bce_pred = 0;
    double mse_rec = 0, mse_pred = 0;
    double psnr_rec = 0, psnr_pred = 0;
    double ssim_rec = 0, ssim_pred = 0;
    double nelbo = 0;  // per-pixel normalization (total pixels of a sequence)

    double missingness_balanced_accuracy = -1;  // -1 when not applicable
    long excluded_object_slots = 0;
    long sample_count = 0;
    int scenario = 0;
    std::uint64_t dataset_seed = 0;
    std::string dataset_sha256;
    std::string config_hash;
    std::string checkpoint_sha256;

    // reproducibility traces: per sample, hex-packed bits, N*K per sample
    std::vector<std::string> z_m_trace;
    std::vector<std::string> gamma_trace;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["bce-per-frame"] = {{"rec", bce_rec}, {"pred", bce_pred}};
        j["mse-per-frame"] = {{"rec", mse_rec}, {"pred", mse_pred}};
        j["psnr"] = {{"rec", psnr_rec}, {"pred", psnr_pred}};
        j["ssim"] = {{"rec", ssim_rec}, {"pred", ssim_pred}};
        j["nelbo"] = nelbo;
        j["missingness-balanced-accuracy"] = missingness_balanced_accuracy;
        j["excluded-object-slots"] = excluded_object_slots;
        j["sample-count"] = sample_count;
        j["scenario"] = scenario;
        j["dataset-seed"] = dataset_seed;
        j["dataset-sha256"] = dataset_sha256;
        j["config-hash"] = config_hash;
        j["checkpoint-sha256"] = checkpoint_sha256;
        j["z-m-trace"] = z_m_trace;
        j["gamma-trace"] = gamma_trace;
        return j;
    }

    static MetricsReport from_json(const nlohmann::json& j) {
        MetricsReport r;
        r.bce_rec = j.at("bce-per-frame").at("rec");
        r.bce_pred = j.at("bce-per-frame").at("pred");
        r.mse_rec = j.at("mse-per-frame").at("rec");
        r.mse_pred = j.at("mse-per-frame").at("pred");
        r.psnr_rec = j.at("psnr").at("rec");
        r.psnr_pred = j.at("psnr").at("pred");
        r.ssim_rec = j.at("ssim").at("rec");
        r.ssim_pred = j.at("ssim").at("pred");
        r.nelbo = j.at("nelbo");
        r.missingness_balanced_accuracy = j.at("missingness-balanced-accuracy");
        r.excluded_object_slots = j.at("excluded-object-slots");
        r.sample_count = j.at("sample-count");
        r.scenario = j.at("scenario");
        r.dataset_seed = j.at("dataset-seed");
        r.dataset_sha256 = j.value("dataset-sha256", "");
        r.config_hash = j.value("config-hash", "");
        r.checkpoint_sha256 = j.value("checkpoint-sha256", "");
        if (j.contains("z-m-trace")) r.z_m_trace = j.at("z-m-trace").get<std::vector<std::string>>();
        if (j.contains("gamma-trace"))
            r.gamma_trace = j.at("gamma-trace").get<std::vector<std::string>>();
        return r;
    }
};

namespace eval_detail {

inline std::string pack_bits_hex(const std::vector<std::uint8_t>& bits) {
    static const char* hexc = "0123456789abcdef";
    std::string out;
    out.reserve((bits.size() + 3) / 4);
    int nibble = 0, filled = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        nibble = (nibble << 1) | (bits[i] ? 1 : 0);
        if (++filled == 4) {
            out.push_back(hexc[nibble]);
            nibble = filled = 0;
        }
    }
    if (filled) out.push_back(hexc[nibble << (4 - filled)]);
    return out;
}

struct Confusion {
    long tp = 0, tn = 0, fp = 0, fn = 0;  // positive = missing
    void add(bool predicted_missing, bool truly_missing) {
        if (truly_missing)
            predicted_missing ? ++tp : ++fn;
        else
            predicted_missing ? ++fp : ++tn;
    }
    double balanced_accuracy() const {
        const double tpr = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 1.0;
        const double tnr = (tn + fp) > 0 ? double(tn) / double(tn + fp) : 1.0;
        return 0.5 * (tpr + tnr);
    }
};

/// Greedy matching of model object slots to ground-truth objects by
/// rendered-mass overlap (sum of per-pixel minima over the input regime).
inline std::vector<int> greedy_match(const std::vector<std::vector<double>>& overlap) {
    const int n_slots = int(overlap.size());
    const int n_objs = n_slots > 0 ? int(overlap[0].size()) : 0;
    std::vector<int> match(n_slots, -1);
    std::vector<bool> slot_used(n_slots, false), obj_used(n_objs, false);
    for (int round = 0; round < std::min(n_slots, n_objs); ++round) {
        double best = -1;
        int bs = -1, bo = -1;
        for (int s = 0; s < n_slots; ++s) {
            if (slot_used[s]) continue;
            for (int o = 0; o < n_objs; ++o) {
                if (obj_used[o]) continue;
                if (overlap[s][o] > best) {
                    best = overlap[s][o];
                    bs = s;
                    bo = o;
                }
            }
        }
        if (bs < 0) break;
        slot_used[bs] = true;
        obj_used[bo] = true;
        match[bs] = bo;
    }
    return match;
}

}  // namespace eval_detail

struct EvalOptions {
    int batch_size = 16;
    int occlusion_rows = 32;
    double empty_slot_mass = 1.0;  // slots below this rendered mass are excluded
};

/// Balanced accuracy of predicted per-(object, step) missingness labels
/// against the ground-truth removal mask, for one sequence.
/// `slot_layers[i][t]` are the model's ungated rendered objects (t < K).
inline void missingness_quality_update(
    const std::vector<std::vector<std::vector<float>>>& slot_layers,
    const std::vector<std::vector<std::uint8_t>>& z_m, const VideoSample& truth, int input_len,
    double empty_slot_mass, eval_detail::Confusion& confusion, long& excluded) {
    const int n_slots = int(slot_layers.size());
    const int px = truth.pixels_per_frame();
    std::vector<std::vector<double>> overlap(n_slots,
                                             std::vector<double>(truth.num_objects, 0.0));
    std::vector<double> slot_mass(n_slots, 0.0);
    for (int s = 0; s < n_slots; ++s)
        for (int t = 0; t < input_len; ++t) {
            const auto& rendered = slot_layers[s][t];
            for (int o = 0; o < truth.num_objects; ++o) {
                const float* gt = truth.layer(o, t);
                double acc = 0;
                for (int p = 0; p < px; ++p) acc += std::min(double(rendered[p]), double(gt[p]));
                overlap[s][o] += acc;
            }
            for (int p = 0; p < px; ++p) slot_mass[s] += rendered[p];
        }
    auto match = eval_detail::greedy_match(overlap);
    for (int s = 0; s < n_slots; ++s) {
        if (match[s] < 0 || slot_mass[s] < empty_slot_mass) {
            ++excluded;
            continue;
        }
        for (int t = 0; t < input_len; ++t)
            confusion.add(z_m[s][t] != 0, truth.missing_at(match[s], t) != 0);
    }
}

/// Full deterministic evaluation of a model on a frozen container.
template <typename S>
MetricsReport evaluate(DiveModelT<S>& model, ContainerReader& data, const GlyphSet& glyphs,
                       const EvalOptions& opts = {}) {
    const ModelConfig& mc = model.config();
    const ContainerHeader& hdr = data.header();
    if (int(hdr.seq_len) != mc.seq_len || int(hdr.height) != mc.frame_size)
        throw std::invalid_argument("evaluate: dataset/model shape mismatch");
    const int K = mc.input_len, T = mc.seq_len, F = mc.frame_size;
    const Scenario scenario = hdr.scenario;
    const metrics::RowBand rec_band = scenario == Scenario::partial_occlusion
                                          ? metrics::RowBand{opts.occlusion_rows, F}
                                          : metrics::RowBand::full(F);
    const metrics::RowBand full_band = metrics::RowBand::full(F);

    ScenarioConfig gen_cfg;
    gen_cfg.num_objects = int(hdr.num_objects);
    gen_cfg.seq_len = T;
    gen_cfg.frame_size = F;

    MetricsReport rep;
    rep.sample_count = hdr.count;
    rep.scenario = int(scenario);
    rep.dataset_seed = hdr.base_seed;

    metrics::FrameAverager bce_rec, bce_pred, mse_rec, mse_pred, psnr_rec, psnr_pred, ssim_rec,
        ssim_pred;
    double nelbo_sum = 0;
    eval_detail::Confusion confusion;
    const bool track_missing = !mc.no_missingness;

    MeanNoise<S> noise;
    SampleParams sp;
    sp.mode = RunMode::eval;
    sp.p_substitute = 0.0;
    sp.p_dynamic = 1.0;

    for (std::uint32_t start = 0; start < hdr.count; start += opts.batch_size) {
        const int B = int(std::min<std::uint32_t>(opts.batch_size, hdr.count - start));
        std::vector<StoredSample> stored;
        stored.reserve(B);
        for (int b = 0; b < B; ++b) stored.push_back(data.read(start + b));
        std::vector<const StoredSample*> ptrs;
        for (const auto& s : stored) ptrs.push_back(&s);
        BatchT<S> batch = make_batch<S>(ptrs, scenario, mc, opts.occlusion_rows);

        GraphT<S> g;
        auto fwd = model.forward(g, batch, sp, noise);
        nelbo_sum += double(g.val(fwd.loss).v[0]) * B;

        std::vector<float> pred_frame(F * F), tgt_frame(F * F);
        for (int b = 0; b < B; ++b) {
            for (int t = 0; t < K; ++t) {
                const auto& pv = g.val(fwd.recon[t]);
                for (int p = 0; p < F * F; ++p) {
                    pred_frame[p] = float(pv(b, p));
                    tgt_frame[p] = float(batch.recon_target[t](b, p));
                }
                bce_rec.add(metrics::bce_frame(pred_frame.data(), tgt_frame.data(), F, rec_band));
                mse_rec.add(metrics::mse_frame(pred_frame.data(), tgt_frame.data(), F, rec_band));
                psnr_rec.add(
                    metrics::psnr_frame(pred_frame.data(), tgt_frame.data(), F, rec_band));
                ssim_rec.add(metrics::ssim_frame(pred_frame.data(), tgt_frame.data(), F, F,
                                                 rec_band));
            }
            for (int t = 0; t < T - K; ++t) {
                const auto& pv = g.val(fwd.pred[t]);
                for (int p = 0; p < F * F; ++p) {
                    pred_frame[p] = float(pv(b, p));
                    tgt_frame[p] = float(batch.pred_target[t](b, p));
                }
                bce_pred.add(
                    metrics::bce_frame(pred_frame.data(), tgt_frame.data(), F, full_band));
                mse_pred.add(
                    metrics::mse_frame(pred_frame.data(), tgt_frame.data(), F, full_band));
                psnr_pred.add(
                    metrics::psnr_frame(pred_frame.data(), tgt_frame.data(), F, full_band));
                ssim_pred.add(metrics::ssim_frame(pred_frame.data(), tgt_frame.data(), F, F,
                                                  full_band));
            }

            // traces + balanced accuracy against the regenerated truth
            std::vector<std::uint8_t> zm_bits, gamma_bits;
            std::vector<std::vector<std::uint8_t>> zm_slot(mc.num_objects);
            for (int i = 0; i < mc.num_objects; ++i) {
                zm_slot[i].resize(K);
                for (int t = 0; t < K; ++t) {
                    zm_slot[i][t] = fwd.z_m[i][t][b];
                    zm_bits.push_back(fwd.z_m[i][t][b]);
                    gamma_bits.push_back(fwd.gamma_sub[i][t][b]);
                }
            }
            rep.z_m_trace.push_back(eval_detail::pack_bits_hex(zm_bits));
            rep.gamma_trace.push_back(eval_detail::pack_bits_hex(gamma_bits));

            if (track_missing) {
                std::vector<std::vector<std::vector<float>>> slot_layers(mc.num_objects);
                for (int i = 0; i < mc.num_objects; ++i) {
                    slot_layers[i].resize(K);
                    for (int t = 0; t < K; ++t) {
                        const auto& cv = g.val(fwd.contrib[i][t]);
                        slot_layers[i][t].resize(F * F);
                        for (int p = 0; p < F * F; ++p) slot_layers[i][t][p] = float(cv(b, p));
                    }
                }
                VideoSample truth =
                    make_sample(glyphs, gen_cfg, scenario, stored[b].seed);
                missingness_quality_update(slot_layers, zm_slot, truth, K,
                                           opts.empty_slot_mass, confusion,
                                           rep.excluded_object_slots);
            }
        }
    }

    rep.bce_rec = bce_rec.mean();
    rep.bce_pred = bce_pred.mean();
    rep.mse_rec = mse_rec.mean();
    rep.mse_pred = mse_pred.mean();
    rep.psnr_rec = psnr_rec.mean();
    rep.psnr_pred = psnr_pred.mean();
    rep.ssim_rec = ssim_rec.mean();
    rep.ssim_pred = ssim_pred.mean();
    rep.nelbo = nelbo_sum / double(hdr.count) / (double(T) * F * F);
    if (track_missing) rep.missingness_balanced_accuracy = confusion.balanced_accuracy();
    return rep;
}

}  // namespace dive
