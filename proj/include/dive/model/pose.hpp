// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// State-space pose model. The pose hidden state is an LSTM over the
// imputed vectors u (input regime) or input-free (prediction regime); a
// stochastic transition variable beta ~ N(mu_p, sigma_p^2) is
// reparameterized and consumed by a deterministic residual transition on
// the raw (pre-squash) pose.

#pragma once

#include <vector>

#include "dive/core/nn.hpp"
#include "dive/core/noise.hpp"
#include "dive/model/missingness.hpp"
#include "dive/model/spatial_transform.hpp"

namespace dive {

template <typename S>
struct PoseStepT {
    Ref mu, logvar;  // transition posterior parameters
    Ref beta;        // reparameterized sample (or mean in eval)
    Ref raw;         // raw pose after f_tran
    Ref pose;        // squashed (tx, ty, scale)
};

template <typename S>
struct PoseModelT {
    LstmCellT<S> lstm_in;    // consumes u^t (input regime)
    LstmCellT<S> lstm_pred;  // input-free (prediction regime)
    LinearT<S> trans_head;   // h_p -> [mu, logvar] for beta
    MlpT<S> f_tran;          // [raw, beta] -> raw increment
    ParamT<S>* init_raw = nullptr;  // learned initial raw pose, one row per object slot
    PoseBounds bounds;
    int pose_dim = 3, beta_dim = 3;
    long clamp_count = 0;

    PoseModelT() = default;
    PoseModelT(ParamStore<S>& ps, const std::string& name, int enc_hidden, int pose_hidden,
               int beta, int ftran_hidden, int num_objects, PoseBounds pb, Rng& rng)
        : lstm_in(ps, name + ".lstm_in", enc_hidden, pose_hidden, rng),
          lstm_pred(ps, name + ".lstm_pred", 0, pose_hidden, rng),
          trans_head(ps, name + ".trans", pose_hidden, 2 * beta, rng),
          f_tran(ps, name + ".ftran", 3 + beta, ftran_hidden, 3, rng, 0.1),
          bounds(pb),
          beta_dim(beta) {
        init_raw = &ps.add(name + ".init_raw", num_objects, 3);
        // start near the glyph's natural footprint: scale ~0.45, centered
        for (int i = 0; i < num_objects; ++i) {
            init_raw->value(i, 0) = S(0);
            init_raw->value(i, 1) = S(0);
            init_raw->value(i, 2) = S(-0.6);
        }
    }

    LstmState<S> zero_state(GraphT<S>& g, int batch) const {
        return lstm_in.zero_state(g, batch);
    }

    /// h_p^t = LSTM(h_p^{t-1}, u^t)  (t <= K)
    LstmState<S> step_hidden(GraphT<S>& g, const LstmState<S>& s, Ref u) const {
        return lstm_in.step(g, u, s);
    }

    /// h_p^t = LSTM(h_p^{t-1})  (t > K; no external input)
    LstmState<S> step_hidden_predict(GraphT<S>& g, const LstmState<S>& s) const {
        return lstm_pred.step(g, Ref{}, s);
    }

    /// Initial raw pose for object slot i, broadcast to the batch.
    Ref initial_raw(GraphT<S>& g, int object, int batch) {
        return tile_rows(g, slice_rows(g, g.param(*init_raw), object, 1), batch);
    }

    Ref squash(GraphT<S>& g, Ref raw) const {
        Ref txy = tanh_(g, slice_cols(g, raw, 0, 2));
        Ref s01 = sigmoid_(g, slice_cols(g, raw, 2, 1));
        Ref sc = add_const(g, scale(g, s01, S(bounds.scale_max - bounds.scale_min)),
                           S(bounds.scale_min));
        return concat_cols(g, txy, sc);
    }

    /// beta ~ N(mu, sigma^2) via mu + sigma * eps, then the residual
    /// transition raw' = raw + f_tran([raw, beta]) and squashing.
    PoseStepT<S> transition(GraphT<S>& g, const LstmState<S>& h_p, Ref raw_prev, RunMode mode,
                            NoiseSource<S>& noise) {
        PoseStepT<S> st;
        Ref out = trans_head(g, h_p.h);
        st.mu = slice_cols(g, out, 0, beta_dim);
        st.logvar = clamp_(g, slice_cols(g, out, beta_dim, beta_dim), S(kLogvarMin),
                           S(kLogvarMax), &clamp_count);
        if (mode == RunMode::train) {
            TensorT<S> eps(g.val(st.mu).rows, beta_dim);
            noise.normal(eps);
            Ref sigma = exp_(g, scale(g, st.logvar, S(0.5)));
            st.beta = add(g, st.mu, mul(g, sigma, g.input(std::move(eps))));
        } else {
            st.beta = st.mu;
        }
        st.raw = add(g, raw_prev, f_tran(g, concat_cols(g, raw_prev, st.beta)));
        st.pose = squash(g, st.raw);
        return st;
    }
};

}  // namespace dive
