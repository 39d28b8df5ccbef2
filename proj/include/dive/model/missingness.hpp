// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Missingness inference and latent-space imputation.
//
// z_m = H(x), x ~ N(mu - 0.5, sigma^2) with [mu, logvar] = FC(h_y); the
// Heaviside is never differentiated - the renderer's soft visibility gate
// g = 1 - logistic(x) is the gradient path into this head. The update
// vector u picks exactly one of {h, h_hat}: h_hat when z_m = 1, otherwise
// h unless a Bernoulli(p) substitution fires (train-time only).

#pragma once

#include <vector>

#include "dive/core/nn.hpp"
#include "dive/core/noise.hpp"

namespace dive {

enum class RunMode { train, eval };

constexpr double kLogvarMin = -18.4;  // sigma floor ~1e-4
constexpr double kLogvarMax = 4.0;

template <typename S>
struct MissingnessSampleT {
    Ref mu, logvar;           // posterior over the pre-threshold variable
    Ref x;                    // sampled (or mean) pre-activation, [B,1]
    Ref gate_soft;            // 1 - logistic(x), in (0,1)
    Ref label_soft;           // logistic(x)   (soft-label ablation)
    std::vector<std::uint8_t> z_m;  // hard labels H(x), one per row
};

template <typename S>
struct MissingnessModelT {
    LinearT<S> head;        // h_y -> [mu, logvar]
    LinearT<S> impute_map;  // h_p^{t-1} -> h_hat (Eq-3-style autoregression)
    long clamp_count = 0;

    MissingnessModelT() = default;
    MissingnessModelT(ParamStore<S>& ps, const std::string& name, int enc_hidden,
                      int pose_hidden, Rng& rng)
        : head(ps, name + ".head", enc_hidden, 2, rng),
          impute_map(ps, name + ".impute", pose_hidden, enc_hidden, rng) {}

    /// Infers the missingness variable from one step's encoder state.
    MissingnessSampleT<S> infer(GraphT<S>& g, Ref h_y, RunMode mode, NoiseSource<S>& noise) {
        const int batch = g.val(h_y).rows;
        Ref out = head(g, h_y);
        MissingnessSampleT<S> m;
        m.mu = slice_cols(g, out, 0, 1);
        m.logvar = clamp_(g, slice_cols(g, out, 1, 1), S(kLogvarMin), S(kLogvarMax),
                          &clamp_count);
        Ref mu_biased = add_const(g, m.mu, S(-0.5));
        if (mode == RunMode::train) {
            TensorT<S> eps(batch, 1);
            noise.normal(eps);
            Ref sigma = exp_(g, scale(g, m.logvar, S(0.5)));
            m.x = add(g, mu_biased, mul(g, sigma, g.input(std::move(eps))));
        } else {
            m.x = mu_biased;  // posterior mean; H(x) stays hard
        }
        m.label_soft = sigmoid_(g, m.x);
        m.gate_soft = sigmoid_(g, scale(g, m.x, S(-1)));
        m.z_m.resize(batch);
        for (int b = 0; b < batch; ++b) m.z_m[b] = g.val(m.x)(b, 0) >= S(0) ? 1 : 0;
        return m;
    }

    /// h_hat^t from the previous pose hidden state (zeros at t=1).
    Ref predict_imputed(GraphT<S>& g, Ref h_p_prev) const { return impute_map(g, h_p_prev); }

    /// Eq.-2 selection. `gamma` are the recorded Bernoulli(p) substitution
    /// draws for rows with z_m = 0 (all zero in eval, where p = 0).
    static Ref impute_select(GraphT<S>& g, const std::vector<std::uint8_t>& z_m,
                             const std::vector<std::uint8_t>& gamma, Ref h, Ref h_hat) {
        std::vector<std::uint8_t> take_hat(z_m.size());
        for (std::size_t b = 0; b < z_m.size(); ++b) take_hat[b] = (z_m[b] || gamma[b]) ? 1 : 0;
        return where_rows(g, std::move(take_hat), h_hat, h);
    }

    /// Soft-label variant: u = (1 - z) h + z h_hat with z = logistic(x).
    static Ref impute_blend(GraphT<S>& g, Ref label_soft, Ref h, Ref h_hat) {
        Ref keep = add_const(g, scale(g, label_soft, S(-1)), S(1));
        return add(g, mul_rows(g, h, keep), mul_rows(g, h_hat, label_soft));
    }
};

}  // namespace dive
