// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dive/core/conv_ops.hpp"
#include "dive/core/graph.hpp"
#include "dive/core/rng.hpp"

namespace dive {

/// Owns every learnable tensor of a model, in creation order. Creation
/// order is fixed by construction, which makes init, checkpointing and
/// the optimizer state layout deterministic.
template <typename S>
class ParamStore {
public:
    ParamT<S>& add(const std::string& name, int rows, int cols) {
        params_.push_back(std::make_unique<ParamT<S>>(name, rows, cols));
        return *params_.back();
    }

    std::vector<ParamT<S>*> all() {
        std::vector<ParamT<S>*> out;
        out.reserve(params_.size());
        for (auto& p : params_) out.push_back(p.get());
        return out;
    }

    ParamT<S>* find(const std::string& name) {
        for (auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    void zero_grads() {
        for (auto& p : params_) p->zero_grad();
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (auto& p : params_) n += p->value.size();
        return n;
    }

private:
    std::vector<std::unique_ptr<ParamT<S>>> params_;
};

namespace init {

template <typename S>
void xavier_uniform(TensorT<S>& w, int fan_in, int fan_out, Rng& rng, double gain = 1.0) {
    const double limit = gain * std::sqrt(6.0 / double(fan_in + fan_out));
    for (auto& x : w.v) x = S(rng.uniform(-limit, limit));
}

template <typename S>
void constant(TensorT<S>& w, S c) {
    w.fill(c);
}

}  // namespace init

template <typename S>
struct LinearT {
    ParamT<S>* W = nullptr;
    ParamT<S>* b = nullptr;
    int in = 0, out = 0;

    LinearT() = default;
    LinearT(ParamStore<S>& ps, const std::string& name, int in_dim, int out_dim, Rng& rng,
            double gain = 1.0, S bias_init = S(0)) : in(in_dim), out(out_dim) {
        W = &ps.add(name + ".W", out_dim, in_dim);
        b = &ps.add(name + ".b", 1, out_dim);
        init::xavier_uniform(W->value, in_dim, out_dim, rng, gain);
        init::constant(b->value, bias_init);
    }

    Ref operator()(GraphT<S>& g, Ref x) const {
        return affine(g, x, g.param(*W), g.param(*b));
    }
};

/// Two-layer perceptron with tanh hidden activation.
template <typename S>
struct MlpT {
    LinearT<S> l1, l2;

    MlpT() = default;
    MlpT(ParamStore<S>& ps, const std::string& name, int in, int hidden, int out, Rng& rng,
         double out_gain = 1.0)
        : l1(ps, name + ".l1", in, hidden, rng),
          l2(ps, name + ".l2", hidden, out, rng, out_gain) {}

    Ref operator()(GraphT<S>& g, Ref x) const { return l2(g, tanh_(g, l1(g, x))); }
};

template <typename S>
struct LstmState {
    Ref h, c;
};

/// Single LSTM cell (gate order i, f, g, o; forget bias 1). Pass an
/// invalid x Ref for an input-free recurrence.
template <typename S>
struct LstmCellT {
    ParamT<S>* W = nullptr;
    ParamT<S>* b = nullptr;
    int input = 0, hidden = 0;

    LstmCellT() = default;
    LstmCellT(ParamStore<S>& ps, const std::string& name, int input_dim, int hidden_dim,
              Rng& rng) : input(input_dim), hidden(hidden_dim) {
        W = &ps.add(name + ".W", 4 * hidden_dim, input_dim + hidden_dim);
        b = &ps.add(name + ".b", 1, 4 * hidden_dim);
        init::xavier_uniform(W->value, input_dim + hidden_dim, 4 * hidden_dim, rng);
        init::constant(b->value, S(0));
        for (int c = hidden_dim; c < 2 * hidden_dim; ++c) b->value(0, c) = S(1);
    }

    LstmState<S> zero_state(GraphT<S>& g, int batch) const {
        Ref z = g.input(TensorT<S>(batch, hidden));
        return {z, z};
    }

    LstmState<S> step(GraphT<S>& g, Ref x, const LstmState<S>& s) const {
        Ref in = x.valid() ? concat_cols(g, x, s.h) : s.h;
        Ref z = affine(g, in, g.param(*W), g.param(*b));
        Ref i = sigmoid_(g, slice_cols(g, z, 0, hidden));
        Ref f = sigmoid_(g, slice_cols(g, z, hidden, hidden));
        Ref u = tanh_(g, slice_cols(g, z, 2 * hidden, hidden));
        Ref o = sigmoid_(g, slice_cols(g, z, 3 * hidden, hidden));
        Ref c2 = add(g, mul(g, f, s.c), mul(g, i, u));
        Ref h2 = mul(g, o, tanh_(g, c2));
        return {h2, c2};
    }
};

/// Three stride-2 convolutions and a linear head; turns one frame into a
/// flat embedding.
template <typename S>
struct FrameEmbedT {
    ConvGeom g1, g2, g3;
    ParamT<S>*W1, *b1, *W2, *b2, *W3, *b3;
    LinearT<S> head;
    int embed_dim = 0;

    FrameEmbedT() = default;
    FrameEmbedT(ParamStore<S>& ps, const std::string& name, int frame, int c1, int c2, int c3,
                int embed, Rng& rng) : embed_dim(embed) {
        g1 = ConvGeom{1, frame, frame, c1, 4, 2, 1};
        g2 = ConvGeom{c1, g1.out_h(), g1.out_w(), c2, 4, 2, 1};
        g3 = ConvGeom{c2, g2.out_h(), g2.out_w(), c3, 4, 2, 1};
        auto conv_param = [&](const std::string& n, int oc, int ic) -> ParamT<S>& {
            ParamT<S>& p = ps.add(n, oc, ic * 16);
            init::xavier_uniform(p.value, ic * 16, oc, rng);
            return p;
        };
        W1 = &conv_param(name + ".conv1.W", c1, 1);
        b1 = &ps.add(name + ".conv1.b", 1, c1);
        W2 = &conv_param(name + ".conv2.W", c2, c1);
        b2 = &ps.add(name + ".conv2.b", 1, c2);
        W3 = &conv_param(name + ".conv3.W", c3, c2);
        b3 = &ps.add(name + ".conv3.b", 1, c3);
        head = LinearT<S>(ps, name + ".head", c3 * g3.out_h() * g3.out_w(), embed, rng);
    }

    Ref operator()(GraphT<S>& g, Ref frames) const {
        Ref h = relu_(g, conv2d(g, frames, g.param(*W1), g.param(*b1), g1));
        h = relu_(g, conv2d(g, h, g.param(*W2), g.param(*b2), g2));
        h = relu_(g, conv2d(g, h, g.param(*W3), g.param(*b3), g3));
        return head(g, h);
    }
};

/// Linear + two transposed convolutions; turns a latent vector into G x G
/// logits (no squashing here).
template <typename S>
struct GlimpseDecoderT {
    LinearT<S> head;
    ConvGeom g1, g2;
    ParamT<S>*W1, *b1, *W2, *b2;
    int base = 0, c0 = 0;

    GlimpseDecoderT() = default;
    GlimpseDecoderT(ParamStore<S>& ps, const std::string& name, int latent, int glimpse,
                    int ch0, int ch1, Rng& rng) : base(glimpse / 4), c0(ch0) {
        head = LinearT<S>(ps, name + ".head", latent, ch0 * base * base, rng);
        g1 = ConvGeom{ch0, base, base, ch1, 4, 2, 1};
        g2 = ConvGeom{ch1, 2 * base, 2 * base, 1, 4, 2, 1};
        W1 = &ps.add(name + ".deconv1.W", ch0, ch1 * 16);
        init::xavier_uniform(W1->value, ch0 * 16, ch1, rng);
        b1 = &ps.add(name + ".deconv1.b", 1, ch1);
        W2 = &ps.add(name + ".deconv2.W", ch1, 1 * 16);
        init::xavier_uniform(W2->value, ch1 * 16, 1, rng);
        b2 = &ps.add(name + ".deconv2.b", 1, 1);
        // start dark: empty glimpses are the right prior for sparse scenes
        b2->value(0, 0) = S(-2);
    }

    Ref operator()(GraphT<S>& g, Ref z) const {
        Ref h = relu_(g, head(g, z));
        h = relu_(g, deconv2d(g, h, g.param(*W1), g.param(*b1), g1));
        return deconv2d(g, h, g.param(*W2), g.param(*b2), g2);
    }
};

/// Adam with optional global-norm gradient clipping.
template <typename S>
class AdamT {
public:
    S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);

    explicit AdamT(std::vector<ParamT<S>*> params) : params_(std::move(params)) {
        slots_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            slots_[i].m.resize(params_[i]->value.rows, params_[i]->value.cols);
            slots_[i].v.resize(params_[i]->value.rows, params_[i]->value.cols);
        }
    }

    long step_count() const { return t_; }

    /// Returns the pre-clip global gradient norm.
    double step(S lr, S clip_norm) {
        double sq = 0;
        for (auto* p : params_)
            for (S gv : p->grad.v) sq += double(gv) * double(gv);
        const double norm = std::sqrt(sq);
        S scale_g = S(1);
        if (clip_norm > S(0) && norm > double(clip_norm)) scale_g = S(double(clip_norm) / norm);

        ++t_;
        const S bc1 = S(1) - S(std::pow(double(beta1), double(t_)));
        const S bc2 = S(1) - S(std::pow(double(beta2), double(t_)));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& P = *params_[i];
            auto& sl = slots_[i];
            for (std::size_t k = 0; k < P.value.v.size(); ++k) {
                const S gk = P.grad.v[k] * scale_g;
                sl.m.v[k] = beta1 * sl.m.v[k] + (S(1) - beta1) * gk;
                sl.v.v[k] = beta2 * sl.v.v[k] + (S(1) - beta2) * gk * gk;
                const S mhat = sl.m.v[k] / bc1;
                const S vhat = sl.v.v[k] / bc2;
                P.value.v[k] -= lr * mhat / (S(std::sqrt(double(vhat))) + eps);
            }
        }
        return norm;
    }

    // flat optimizer state, for checkpointing
    std::vector<S> serialize_state() const {
        std::vector<S> out;
        for (const auto& sl : slots_) {
            out.insert(out.end(), sl.m.v.begin(), sl.m.v.end());
            out.insert(out.end(), sl.v.v.begin(), sl.v.v.end());
        }
        return out;
    }

    bool restore_state(const std::vector<S>& flat, long t) {
        std::size_t need = 0;
        for (const auto& sl : slots_) need += sl.m.v.size() + sl.v.v.size();
        if (flat.size() != need) return false;
        std::size_t off = 0;
        for (auto& sl : slots_) {
            std::copy(flat.begin() + off, flat.begin() + off + sl.m.v.size(), sl.m.v.begin());
            off += sl.m.v.size();
            std::copy(flat.begin() + off, flat.begin() + off + sl.v.v.size(), sl.v.v.begin());
            off += sl.v.v.size();
        }
        t_ = t;
        return true;
    }

private:
    struct Slot {
        TensorT<S> m, v;
    };
    std::vector<ParamT<S>*> params_;
    std::vector<Slot> slots_;
    long t_ = 0;
};

}  // namespace dive
