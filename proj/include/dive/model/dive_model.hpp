// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Full DIVE generative video model: sequential object decomposition,
// missingness inference with latent-space imputation, state-space pose,
// static/dynamic appearance, and per-object rendering with missingness
// gating. One forward() builds the whole computation graph for a batch
// and returns the ELBO decomposition plus the label/selection traces.

#pragma once

#include <string>
#include <vector>

#include "dive/core/nn.hpp"
#include "dive/core/noise.hpp"
#include "dive/model/appearance.hpp"
#include "dive/model/frame_generator.hpp"
#include "dive/model/missingness.hpp"
#include "dive/model/pose.hpp"
#include "dive/model/sequence_encoder.hpp"

namespace dive {

struct ModelConfig {
    int num_objects = 2;  // N, an upper bound on objects per scene
    int seq_len = 20;     // T
    int input_len = 10;   // K
    int frame_size = 64;
    int glimpse_size = 28;
    double scale_min = 0.15, scale_max = 1.0;

    int enc_conv1 = 8, enc_conv2 = 16, enc_conv3 = 32;
    int enc_embed = 128;
    int enc_hidden = 64;   // h_y
    int pose_hidden = 64;  // h_p
    int beta_dim = 3;
    int ftran_hidden = 32;
    int app_glimpse_embed = 96;
    int app_hidden = 128;  // h_a
    int app_static = 256;  // a_s
    int app_dynamic = 48;  // a_d
    int z_appearance = 128;
    int dec_ch0 = 16, dec_ch1 = 8;

    // ablation switches
    bool no_missingness = false;    // z_m == 0, u == h, no gating
    bool static_appearance = false; // p_dynamic forced to 0 everywhere
    bool soft_labels = false;       // logistic labels instead of Heaviside

    bool gaussian_likelihood = false;  // 0.5*SSE instead of BCE
    std::uint64_t init_seed = 1;

    void validate() const {
        if (num_objects < 1) throw std::invalid_argument("num_objects must be >= 1");
        if (seq_len < 2 || input_len < 1 || input_len >= seq_len)
            throw std::invalid_argument("need 1 <= input_len < seq_len");
        if (frame_size % 8 != 0) throw std::invalid_argument("frame_size must be 8-divisible");
        if (glimpse_size % 4 != 0)
            throw std::invalid_argument("glimpse_size must be 4-divisible");
    }
};

template <typename S>
struct BatchT {
    int batch = 0;
    TensorT<S> frames_in;                  // [K*B, F*F], time-major rows (t*B + b)
    std::vector<TensorT<S>> recon_target;  // K frames, each [B, F*F]
    std::vector<TensorT<S>> pred_target;   // T-K frames, each [B, F*F]
    TensorT<S> vis_mask;                   // [B, F*F]; empty => all visible
    bool has_vis_mask() const { return !vis_mask.v.empty(); }
};

struct SampleParams {
    RunMode mode = RunMode::train;
    double p_substitute = 0.25;  // Eq.-2 Bernoulli (0 in eval)
    double p_dynamic = 0.7;      // Eq.-7 Bernoulli (1 in eval, 0 if static)
};

struct ElboTerms {
    double recon_ll = 0, pred_ll = 0;
    double kl_pose = 0, kl_appearance = 0, kl_missingness = 0;
    double total = 0;  // recon_ll + pred_ll - sum of KLs

    double kl_sum() const { return kl_pose + kl_appearance + kl_missingness; }
    double nelbo() const { return -total; }
    bool finite() const {
        return std::isfinite(recon_ll) && std::isfinite(pred_ll) && std::isfinite(kl_pose) &&
               std::isfinite(kl_appearance) && std::isfinite(kl_missingness);
    }
};

/// [object][t][batch-row] bit traces.
using BitTrace = std::vector<std::vector<std::vector<std::uint8_t>>>;

template <typename S>
struct ForwardResultT {
    Ref loss;  // scalar graph node: mean NELBO over the batch
    ElboTerms terms;

    // per-term scalar nodes (batch sums), mostly for gradient-path tests
    Ref bce_recon_node, bce_pred_node;
    Ref kl_pose_node, kl_appearance_node, kl_missingness_node;

    BitTrace z_m;        // [N][K][B] hard missingness labels
    BitTrace gamma_sub;  // [N][K][B] Eq.-2 substitution draws
    BitTrace gamma_dyn;  // [N][T][B] Eq.-7 mixing draws

    std::vector<Ref> recon;                   // K composed frames [B, F*F]
    std::vector<Ref> pred;                    // T-K composed frames
    std::vector<std::vector<Ref>> contrib;    // [N][T] ungated placed objects
    std::vector<std::vector<Ref>> poses;      // [N][T] squashed (tx,ty,scale)
};

template <typename S>
class DiveModelT {
public:
    explicit DiveModelT(ModelConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(mix_seed({0xD13EULL, cfg.init_seed}));
        PoseBounds pb{cfg.scale_min, cfg.scale_max};
        encoder = SequenceEncoderT<S>(store_, "enc", cfg.frame_size, cfg.enc_conv1,
                                      cfg.enc_conv2, cfg.enc_conv3, cfg.enc_embed,
                                      cfg.enc_hidden, rng);
        missingness = MissingnessModelT<S>(store_, "miss", cfg.enc_hidden, cfg.pose_hidden, rng);
        pose = PoseModelT<S>(store_, "pose", cfg.enc_hidden, cfg.pose_hidden, cfg.beta_dim,
                             cfg.ftran_hidden, cfg.num_objects, pb, rng);
        const int gp = cfg.glimpse_size * cfg.glimpse_size;
        appearance = AppearanceModelT<S>(store_, "app", gp, cfg.app_glimpse_embed,
                                         cfg.app_hidden, cfg.app_static, cfg.app_dynamic,
                                         cfg.z_appearance, rng);
        generator = FrameGeneratorT<S>(store_, "gen", cfg.z_appearance, cfg.glimpse_size,
                                       cfg.frame_size, cfg.dec_ch0, cfg.dec_ch1, pb, rng);
        // stagger initial poses so object slots separate early
        for (int i = 0; i < cfg.num_objects; ++i)
            pose.init_raw->value(i, 0) = S(0.05 * (2 * i - (cfg.num_objects - 1)));
    }

    const ModelConfig& config() const { return cfg_; }
    ParamStore<S>& params() { return store_; }

    ForwardResultT<S> forward(GraphT<S>& g, const BatchT<S>& batch, const SampleParams& sp,
                              NoiseSource<S>& noise) {
        const ModelConfig& c = cfg_;
        const int B = batch.batch, K = c.input_len, T = c.seq_len, N = c.num_objects;
        const int F = c.frame_size, G = c.glimpse_size;
        const double p_dyn = c.static_appearance ? 0.0 : sp.p_dynamic;
        const double p_sub = (sp.mode == RunMode::eval) ? 0.0 : sp.p_substitute;

        ForwardResultT<S> r;
        r.z_m.assign(N, {});
        r.gamma_sub.assign(N, {});
        r.gamma_dyn.assign(N, {});
        r.contrib.assign(N, std::vector<Ref>(T));
        r.poses.assign(N, std::vector<Ref>(T));

        Ref frames_in = g.input(batch.frames_in);
        std::vector<Ref> frame_t(K);
        for (int t = 0; t < K; ++t) frame_t[t] = slice_rows(g, frames_in, t * B, B);

        auto enc_h = encoder.encode(g, frames_in, B, K, N);

        std::vector<Ref> kl_pose_terms, kl_app_terms, kl_miss_terms;
        std::vector<std::vector<Ref>> recon_parts(K), pred_parts(T - K);
        Ref zeros_pose_h = g.input(TensorT<S>(B, c.pose_hidden));

        for (int i = 0; i < N; ++i) {
            // --- missingness over the input regime
            std::vector<MissingnessSampleT<S>> miss(K);
            r.z_m[i].assign(K, std::vector<std::uint8_t>(B, 0));
            r.gamma_sub[i].assign(K, std::vector<std::uint8_t>(B, 0));
            if (!c.no_missingness) {
                for (int t = 0; t < K; ++t) {
                    miss[t] = missingness.infer(g, enc_h[i][t], sp.mode, noise);
                    r.z_m[i][t] = miss[t].z_m;
                    kl_miss_terms.push_back(gauss_kl_sum(g, miss[t].mu, miss[t].logvar));
                }
            }

            // --- imputation + pose hidden recurrence
            std::vector<LstmState<S>> h_p(T);
            auto pst = pose.zero_state(g, B);
            for (int t = 0; t < K; ++t) {
                Ref u;
                if (c.no_missingness) {
                    u = enc_h[i][t];
                } else {
                    Ref h_hat = missingness.predict_imputed(g, t == 0 ? zeros_pose_h
                                                                      : h_p[t - 1].h);
                    if (c.soft_labels) {
                        u = MissingnessModelT<S>::impute_blend(g, miss[t].label_soft,
                                                               enc_h[i][t], h_hat);
                    } else {
                        auto gamma = noise.bernoulli_vec(p_sub, B);
                        for (int b = 0; b < B; ++b)
                            if (miss[t].z_m[b]) gamma[b] = 0;  // only the z_m=0 branch mixes
                        r.gamma_sub[i][t] = gamma;
                        u = MissingnessModelT<S>::impute_select(g, miss[t].z_m, gamma,
                                                                enc_h[i][t], h_hat);
                    }
                }
                pst = pose.step_hidden(g, pst, u);
                h_p[t] = pst;
            }
            for (int t = K; t < T; ++t) {
                pst = pose.step_hidden_predict(g, pst);
                h_p[t] = pst;
            }

            // --- pose latents via stochastic transitions
            Ref raw = pose.initial_raw(g, i, B);
            for (int t = 0; t < T; ++t) {
                auto step = pose.transition(g, h_p[t], raw, sp.mode, noise);
                raw = step.raw;
                r.poses[i][t] = step.pose;
                kl_pose_terms.push_back(gauss_kl_sum(g, step.mu, step.logvar));
            }

            // --- appearance: glimpse recurrence, static code, dynamic chain
            std::vector<Ref> glimpse(K);
            for (int t = 0; t < K; ++t)
                glimpse[t] = st_extract(g, frame_t[t], r.poses[i][t], F, G, generator.bounds);

            std::vector<Ref> h_a(T);  // h_a[t] pairs with delta^t
            auto ast = appearance.lstm_glimpse.zero_state(g, B);
            h_a[0] = ast.h;
            for (int t = 0; t + 1 < K; ++t) {
                ast = appearance.step_glimpse(g, ast, glimpse[t], r.z_m[i][t]);
                h_a[t + 1] = ast.h;
            }
            Ref a_s = appearance.static_code(g, ast);
            for (int t = K - 1; t + 1 < T; ++t) {
                ast = appearance.step_predict(g, ast);
                h_a[t + 1] = ast.h;
            }

            std::vector<Ref> a_d(T);
            if (!c.static_appearance) {
                a_d[0] = appearance.dynamic_first(g, a_s, glimpse[0]);
                for (int t = 0; t + 1 < T; ++t)
                    a_d[t + 1] = appearance.dynamic_step(g, a_d[t], h_a[t], a_s);
            }

            // --- per-step appearance sample, decode, place, gate
            r.gamma_dyn[i].assign(T, std::vector<std::uint8_t>(B, 0));
            for (int t = 0; t < T; ++t) {
                auto gamma = noise.bernoulli_vec(p_dyn, B);
                r.gamma_dyn[i][t] = gamma;
                auto az = appearance.sample(g, a_s, c.static_appearance ? Ref{} : a_d[t],
                                            gamma, sp.mode, noise);
                kl_app_terms.push_back(gauss_kl_sum(g, az.mu, az.logvar));

                Ref dec = generator.decode_glimpse(g, az.z_a);
                Ref placed = generator.place_object(g, dec, r.poses[i][t]);
                r.contrib[i][t] = placed;
                if (t < K) {
                    Ref gated = placed;
                    if (!c.no_missingness)
                        gated = FrameGeneratorT<S>::gate_contribution(
                            g, placed, sp.mode, r.z_m[i][t], miss[t].gate_soft);
                    recon_parts[t].push_back(gated);
                } else {
                    pred_parts[t - K].push_back(placed);  // the future is complete
                }
            }
        }

        // --- likelihoods
        r.recon.resize(K);
        r.pred.resize(T - K);
        std::vector<Ref> nll_terms;
        const TensorT<S>* mask = batch.has_vis_mask() ? &batch.vis_mask : nullptr;
        for (int t = 0; t < K; ++t) {
            r.recon[t] = FrameGeneratorT<S>::compose(g, recon_parts[t]);
            nll_terms.push_back(pixel_nll(g, r.recon[t], batch.recon_target[t], mask));
        }
        Ref bce_rec = add_n(g, nll_terms);
        std::vector<Ref> pred_terms;
        for (int t = 0; t < T - K; ++t) {
            r.pred[t] = FrameGeneratorT<S>::compose(g, pred_parts[t]);
            pred_terms.push_back(pixel_nll(g, r.pred[t], batch.pred_target[t], nullptr));
        }
        Ref bce_pred = add_n(g, pred_terms);

        Ref kl_pose_sum = add_n(g, kl_pose_terms);
        Ref kl_app_sum = add_n(g, kl_app_terms);
        Ref kl_all = add(g, kl_pose_sum, kl_app_sum);
        Ref kl_miss_sum;
        if (!kl_miss_terms.empty()) {
            kl_miss_sum = add_n(g, kl_miss_terms);
            kl_all = add(g, kl_all, kl_miss_sum);
        }

        // NELBO = BCE_rec + BCE_pred + KL; minimize its batch mean
        r.loss = scale(g, add(g, add(g, bce_rec, bce_pred), kl_all), S(1) / S(B));
        r.bce_recon_node = bce_rec;
        r.bce_pred_node = bce_pred;
        r.kl_pose_node = kl_pose_sum;
        r.kl_appearance_node = kl_app_sum;
        r.kl_missingness_node = kl_miss_sum;

        r.terms.recon_ll = -double(g.val(bce_rec).v[0]) / B;
        r.terms.pred_ll = -double(g.val(bce_pred).v[0]) / B;
        r.terms.kl_pose = double(g.val(kl_pose_sum).v[0]) / B;
        r.terms.kl_appearance = double(g.val(kl_app_sum).v[0]) / B;
        r.terms.kl_missingness =
            kl_miss_sum.valid() ? double(g.val(kl_miss_sum).v[0]) / B : 0.0;
        r.terms.total = r.terms.recon_ll + r.terms.pred_ll - r.terms.kl_sum();
        return r;
    }

    SequenceEncoderT<S> encoder;
    MissingnessModelT<S> missingness;
    PoseModelT<S> pose;
    AppearanceModelT<S> appearance;
    FrameGeneratorT<S> generator;

private:
    Ref pixel_nll(GraphT<S>& g, Ref pred, const TensorT<S>& target, const TensorT<S>* mask) {
        if (cfg_.gaussian_likelihood) return scale(g, mse_sum(g, pred, target, mask), S(0.5));
        return bce_sum(g, pred, target, mask);
    }

    ModelConfig cfg_;
    ParamStore<S> store_;
};

using DiveModel = DiveModelT<float>;

}  // namespace dive
