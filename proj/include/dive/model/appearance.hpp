// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Appearance model. A glimpse-driven recurrence produces the static code
// a_s = FC(h_a^K); an input-free recurrence extends h_a into the
// prediction regime. The dynamic code evolves by learned residuals,
// a_d^{t+1} = a_d^t + FC([h_a^t, a_s]), and the posterior over z_a^t mixes
// [a_s, gamma * a_d^t] with gamma ~ Bernoulli(p_dynamic). Steps whose
// missingness label is 1 skip both the glimpse input and the state update.

#pragma once

#include <vector>

#include "dive/core/nn.hpp"
#include "dive/core/noise.hpp"
#include "dive/model/missingness.hpp"

namespace dive {

template <typename S>
struct AppearanceSampleT {
    Ref mu, logvar;
    Ref z_a;
};

template <typename S>
struct AppearanceModelT {
    LinearT<S> glimpse_embed;  // raw glimpse -> LSTM1 input
    LstmCellT<S> lstm_glimpse; // Eq.-6 LSTM_1 (input regime)
    LstmCellT<S> lstm_pred;    // Eq.-6 LSTM_2 (prediction regime, separate params)
    LinearT<S> static_head;    // h_a^K -> a_s
    LinearT<S> dynamic_init;   // [a_s, glimpse^1] -> a_d^1
    LinearT<S> delta_head;     // [h_a^t, a_s] -> delta^t
    LinearT<S> posterior;      // [a_s, gamma*a_d] -> [mu, logvar] of z_a
    int z_dim = 0, a_dynamic = 0;
    long clamp_count = 0;

    AppearanceModelT() = default;
    AppearanceModelT(ParamStore<S>& ps, const std::string& name, int glimpse_pixels,
                     int glimpse_embed_dim, int hidden, int a_static, int a_dyn, int z_app,
                     Rng& rng)
        : glimpse_embed(ps, name + ".gembed", glimpse_pixels, glimpse_embed_dim, rng),
          lstm_glimpse(ps, name + ".lstm1", glimpse_embed_dim, hidden, rng),
          lstm_pred(ps, name + ".lstm2", 0, hidden, rng),
          static_head(ps, name + ".static", hidden, a_static, rng),
          dynamic_init(ps, name + ".dyn_init", a_static + glimpse_pixels, a_dyn, rng),
          delta_head(ps, name + ".delta", hidden + a_static, a_dyn, rng, 0.1),
          posterior(ps, name + ".posterior", a_static + a_dyn, 2 * z_app, rng),
          z_dim(z_app),
          a_dynamic(a_dyn) {}

    /// Input-regime state update consuming one glimpse; rows with
    /// z_m = 1 carry their state through unchanged.
    LstmState<S> step_glimpse(GraphT<S>& g, const LstmState<S>& s, Ref glimpse,
                              const std::vector<std::uint8_t>& z_m) const {
        auto next = lstm_glimpse.step(g, relu_(g, glimpse_embed(g, glimpse)), s);
        bool any_missing = false;
        for (auto b : z_m) any_missing |= (b != 0);
        if (!any_missing) return next;
        return {where_rows(g, z_m, s.h, next.h), where_rows(g, z_m, s.c, next.c)};
    }

    LstmState<S> step_predict(GraphT<S>& g, const LstmState<S>& s) const {
        return lstm_pred.step(g, Ref{}, s);
    }

    Ref static_code(GraphT<S>& g, const LstmState<S>& s_last) const {
        return static_head(g, s_last.h);
    }

    Ref dynamic_first(GraphT<S>& g, Ref a_s, Ref first_glimpse) const {
        return dynamic_init(g, concat_cols(g, a_s, first_glimpse));
    }

    Ref dynamic_step(GraphT<S>& g, Ref a_d, Ref h_a, Ref a_s) const {
        return add(g, a_d, delta_head(g, concat_cols(g, h_a, a_s)));
    }

    /// z_a^t ~ N(mu, sigma^2), parameters from [a_s, gamma * a_d^t].
    /// `gamma` holds the per-row Bernoulli(p_dynamic) draws; pass an
    /// invalid a_d Ref for the static-only configuration (gamma == 0).
    AppearanceSampleT<S> sample(GraphT<S>& g, Ref a_s, Ref a_d,
                                const std::vector<std::uint8_t>& gamma, RunMode mode,
                                NoiseSource<S>& noise) {
        const int batch = g.val(a_s).rows;
        Ref mixed;
        if (a_d.valid()) {
            TensorT<S> gcol(batch, 1);
            for (int b = 0; b < batch; ++b) gcol(b, 0) = gamma[b] ? S(1) : S(0);
            mixed = mul_rows(g, a_d, g.input(std::move(gcol)));
        } else {
            mixed = g.input(TensorT<S>(batch, a_dynamic));
        }
        Ref out = posterior(g, concat_cols(g, a_s, mixed));
        AppearanceSampleT<S> r;
        r.mu = slice_cols(g, out, 0, z_dim);
        r.logvar = clamp_(g, slice_cols(g, out, z_dim, z_dim), S(kLogvarMin), S(kLogvarMax),
                          &clamp_count);
        if (mode == RunMode::train) {
            TensorT<S> eps(batch, z_dim);
            noise.normal(eps);
            Ref sigma = exp_(g, scale(g, r.logvar, S(0.5)));
            r.z_a = add(g, r.mu, mul(g, sigma, g.input(std::move(eps))));
        } else {
            r.z_a = r.mu;
        }
        return r;
    }
};

}  // namespace dive
