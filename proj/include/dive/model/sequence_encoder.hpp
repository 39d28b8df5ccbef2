// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Per-object input encoding h_{i,y}^t: a convolutional frame embedding
// feeds a bidirectional recurrence over the input steps; object i's step
// input is [embed(y^t), h_{i-1,y}^t], so decomposition is strictly
// sequential over objects (zeros condition the first object).

#pragma once

#include <vector>

#include "dive/core/nn.hpp"

namespace dive {

template <typename S>
struct SequenceEncoderT {
    FrameEmbedT<S> embed;
    LstmCellT<S> fwd, bwd;
    int hidden = 0;

    SequenceEncoderT() = default;
    SequenceEncoderT(ParamStore<S>& ps, const std::string& name, int frame_size, int c1, int c2,
                     int c3, int embed_dim, int hidden_dim, Rng& rng)
        : embed(ps, name + ".embed", frame_size, c1, c2, c3, embed_dim, rng),
          fwd(ps, name + ".fwd", embed_dim + hidden_dim, hidden_dim, rng),
          bwd(ps, name + ".bwd", embed_dim + hidden_dim, hidden_dim, rng),
          hidden(hidden_dim) {}

    /// Embeds K frames stacked time-major ([t*B + b] rows) in one conv pass.
    std::vector<Ref> embed_frames(GraphT<S>& g, Ref frames, int batch, int steps) const {
        Ref all = embed(g, frames);
        std::vector<Ref> per_t(steps);
        for (int t = 0; t < steps; ++t) per_t[t] = slice_rows(g, all, t * batch, batch);
        return per_t;
    }

    /// One object's bidirectional pass; direction outputs are summed.
    /// `prev` holds the previous object's h states (zeros for object 1).
    std::vector<Ref> encode_object(GraphT<S>& g, const std::vector<Ref>& emb,
                                   const std::vector<Ref>& prev) const {
        const int steps = int(emb.size());
        std::vector<Ref> hf(steps), hb(steps);
        auto sf = fwd.zero_state(g, g.val(emb[0]).rows);
        for (int t = 0; t < steps; ++t) {
            sf = fwd.step(g, concat_cols(g, emb[t], prev[t]), sf);
            hf[t] = sf.h;
        }
        auto sb = bwd.zero_state(g, g.val(emb[0]).rows);
        for (int t = steps - 1; t >= 0; --t) {
            sb = bwd.step(g, concat_cols(g, emb[t], prev[t]), sb);
            hb[t] = sb.h;
        }
        std::vector<Ref> h(steps);
        for (int t = 0; t < steps; ++t) h[t] = add(g, hf[t], hb[t]);
        return h;
    }

    /// Full N-object encoding: h[i][t], objects conditioned on 1..i-1 only.
    std::vector<std::vector<Ref>> encode(GraphT<S>& g, Ref frames, int batch, int steps,
                                         int num_objects) const {
        auto emb = embed_frames(g, frames, batch, steps);
        std::vector<Ref> prev(steps);
        Ref zeros = g.input(TensorT<S>(batch, hidden));
        for (int t = 0; t < steps; ++t) prev[t] = zeros;
        std::vector<std::vector<Ref>> h(num_objects);
        for (int i = 0; i < num_objects; ++i) {
            h[i] = encode_object(g, emb, prev);
            prev = h[i];
        }
        return h;
    }
};

}  // namespace dive
