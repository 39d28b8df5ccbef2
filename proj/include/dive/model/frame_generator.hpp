// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Decoding and composition. Each object's appearance decodes to a G x G
// glimpse in [0,1], is placed by the spatial transformer, and is gated by
// missingness only in the reconstruction regime: hard (1 - z_m) in eval,
// the soft visibility gate in training (the Heaviside stays out of the
// gradient path). Prediction renders every object - the future is assumed
// complete. Frames are the clamped sum of contributions.

#pragma once

#include <vector>

#include "dive/core/nn.hpp"
#include "dive/model/missingness.hpp"
#include "dive/model/spatial_transform.hpp"

namespace dive {

template <typename S>
struct FrameGeneratorT {
    GlimpseDecoderT<S> decoder;
    int glimpse_size = 28, frame_size = 64;
    PoseBounds bounds;

    FrameGeneratorT() = default;
    FrameGeneratorT(ParamStore<S>& ps, const std::string& name, int z_dim, int glimpse,
                    int frame, int ch0, int ch1, PoseBounds pb, Rng& rng)
        : decoder(ps, name + ".dec", z_dim, glimpse, ch0, ch1, rng),
          glimpse_size(glimpse),
          frame_size(frame),
          bounds(pb) {}

    /// z_a -> G x G glimpse, squashed to [0,1].
    Ref decode_glimpse(GraphT<S>& g, Ref z_a) const { return sigmoid_(g, decoder(g, z_a)); }

    Ref place_object(GraphT<S>& g, Ref glimpse, Ref pose) const {
        return st_place(g, glimpse, pose, glimpse_size, frame_size, bounds);
    }

    /// Reconstruction-regime gate for one step. Hard labels zero the
    /// contribution exactly; the train-time soft gate keeps gradients
    /// flowing into the missingness head.
    static Ref gate_contribution(GraphT<S>& g, Ref contribution, RunMode mode,
                                 const std::vector<std::uint8_t>& z_m, Ref gate_soft) {
        if (mode == RunMode::eval) {
            const int batch = g.val(contribution).rows;
            TensorT<S> hard(batch, 1);
            for (int b = 0; b < batch; ++b) hard(b, 0) = z_m[b] ? S(0) : S(1);
            return mul_rows(g, contribution, g.input(std::move(hard)));
        }
        return mul_rows(g, contribution, gate_soft);
    }

    /// Sum over objects, clamped to [0,1] (the only post-sum nonlinearity).
    static Ref compose(GraphT<S>& g, const std::vector<Ref>& contributions) {
        return clamp_(g, add_n(g, contributions), S(0), S(1));
    }
};

}  // namespace dive
