// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Packs video samples into model batches. The input regime reconstructs
// the corrupted stream y^{1:K}; prediction is supervised on the complete
// stream x^{K+1:T}. Scenario 1 additionally masks the occluded rows out
// of the reconstruction likelihood.

#pragma once

#include <vector>

#include "dive/data/container.hpp"
#include "dive/data/scenario.hpp"
#include "dive/model/dive_model.hpp"

namespace dive {

namespace batching_detail {

template <typename S>
void fill_mask(TensorT<S>& mask, int batch, int frame, int occl_rows) {
    mask.resize(batch, frame * frame);
    mask.fill(S(1));
    for (int b = 0; b < batch; ++b)
        for (int p = 0; p < occl_rows * frame; ++p) mask(b, p) = S(0);
}

}  // namespace batching_detail

/// Batch from in-memory generated samples.
template <typename S>
BatchT<S> make_batch(const std::vector<const VideoSample*>& samples, const ModelConfig& mc,
                     int occlusion_rows = 32) {
    const int B = int(samples.size());
    const int K = mc.input_len, T = mc.seq_len, F = mc.frame_size;
    BatchT<S> batch;
    batch.batch = B;
    batch.frames_in.resize(K * B, F * F);
    batch.recon_target.assign(K, TensorT<S>(B, F * F));
    batch.pred_target.assign(T - K, TensorT<S>(B, F * F));
    bool occluded = false;
    for (int b = 0; b < B; ++b) {
        const VideoSample& s = *samples[b];
        if (s.seq_len != T || s.frame_size != F)
            throw std::invalid_argument("batch: sample shape mismatch");
        occluded |= (s.scenario == Scenario::partial_occlusion);
        for (int t = 0; t < K; ++t) {
            const float* f = s.frame(s.corrupted, t);
            for (int p = 0; p < F * F; ++p) {
                batch.frames_in(t * B + b, p) = S(f[p]);
                batch.recon_target[t](b, p) = S(f[p]);
            }
        }
        for (int t = K; t < T; ++t) {
            const float* f = s.frame(s.complete, t);
            for (int p = 0; p < F * F; ++p) batch.pred_target[t - K](b, p) = S(f[p]);
        }
    }
    if (occluded) batching_detail::fill_mask(batch.vis_mask, B, F, occlusion_rows);
    return batch;
}

/// Batch from container-stored samples.
template <typename S>
BatchT<S> make_batch(const std::vector<const StoredSample*>& samples, Scenario scenario,
                     const ModelConfig& mc, int occlusion_rows = 32) {
    const int B = int(samples.size());
    const int K = mc.input_len, T = mc.seq_len, F = mc.frame_size;
    const std::size_t fpx = std::size_t(F) * F;
    BatchT<S> batch;
    batch.batch = B;
    batch.frames_in.resize(K * B, F * F);
    batch.recon_target.assign(K, TensorT<S>(B, F * F));
    batch.pred_target.assign(T - K, TensorT<S>(B, F * F));
    for (int b = 0; b < B; ++b) {
        const StoredSample& s = *samples[b];
        if (s.corrupted.size() != fpx * T)
            throw std::invalid_argument("batch: stored sample shape mismatch");
        for (int t = 0; t < K; ++t)
            for (std::size_t p = 0; p < fpx; ++p) {
                batch.frames_in(t * B + b, int(p)) = S(s.corrupted[t * fpx + p]);
                batch.recon_target[t](b, int(p)) = S(s.corrupted[t * fpx + p]);
            }
        for (int t = K; t < T; ++t)
            for (std::size_t p = 0; p < fpx; ++p)
                batch.pred_target[t - K](b, int(p)) = S(s.complete[t * fpx + p]);
    }
    if (scenario == Scenario::partial_occlusion)
        batching_detail::fill_mask(batch.vis_mask, B, F, occlusion_rows);
    return batch;
}

}  // namespace dive
