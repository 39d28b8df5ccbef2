// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Noise injection points for the stochastic model. All sampling flows
// through a NoiseSource so that (a) callers own the RNG stream, (b) eval
// can run on posterior means, and (c) gradient checks can freeze draws
// and replay them across repeated forwards.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dive/core/rng.hpp"
#include "dive/core/tensor.hpp"

namespace dive {

template <typename S>
class NoiseSource {
public:
    virtual ~NoiseSource() = default;
    virtual void normal(TensorT<S>& eps) = 0;
    virtual bool bernoulli(double p) = 0;

    std::vector<std::uint8_t> bernoulli_vec(double p, int n) {
        std::vector<std::uint8_t> out(n);
        for (auto& b : out) b = bernoulli(p) ? 1 : 0;
        return out;
    }
};

template <typename S>
class RngNoise final : public NoiseSource<S> {
public:
    explicit RngNoise(Rng rng) : rng_(rng) {}
    void normal(TensorT<S>& eps) override {
        for (auto& x : eps.v) x = S(rng_.normal());
    }
    bool bernoulli(double p) override { return rng_.bernoulli(p); }

private:
    Rng rng_;
};

/// Posterior means: eps = 0; Bernoulli draws are deterministic (intended
/// for p in {0, 1}, which is how evaluation sets them).
template <typename S>
class MeanNoise final : public NoiseSource<S> {
public:
    void normal(TensorT<S>& eps) override { eps.fill(S(0)); }
    bool bernoulli(double p) override { return p >= 0.5; }
};

/// Records draws on the first pass, replays them on later passes (call
/// rewind() before each replay). Used to freeze stochastic terms while
/// finite-differencing the ELBO.
template <typename S>
class FrozenNoise final : public NoiseSource<S> {
public:
    explicit FrozenNoise(NoiseSource<S>& inner) : inner_(&inner) {}

    void rewind() {
        replay_ = true;
        normal_cursor_ = 0;
        bern_cursor_ = 0;
    }

    void normal(TensorT<S>& eps) override {
        if (!replay_) {
            inner_->normal(eps);
            normals_.push_back(eps.v);
            return;
        }
        if (normal_cursor_ >= normals_.size()) throw std::logic_error("frozen noise exhausted");
        const auto& rec = normals_[normal_cursor_++];
        if (rec.size() != eps.v.size()) throw std::logic_error("frozen noise shape mismatch");
        eps.v = rec;
    }

    bool bernoulli(double p) override {
        if (!replay_) {
            const bool b = inner_->bernoulli(p);
            bernoullis_.push_back(b ? 1 : 0);
            return b;
        }
        if (bern_cursor_ >= bernoullis_.size()) throw std::logic_error("frozen noise exhausted");
        return bernoullis_[bern_cursor_++] != 0;
    }

private:
    NoiseSource<S>* inner_;
    bool replay_ = false;
    std::vector<std::vector<S>> normals_;
    std::vector<std::uint8_t> bernoullis_;
    std::size_t normal_cursor_ = 0, bern_cursor_ = 0;
};

}  // namespace dive
