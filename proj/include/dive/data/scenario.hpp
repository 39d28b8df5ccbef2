// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Moving-digit sequence synthesis and the three missing-data corruptions:
//   1 partial occlusion  - the upper half of every frame is blanked
//   2 out of scene       - each object vanishes for two consecutive steps
//   3 varying appearance - per-object elastic warp with decaying intensity,
//                          plus a single fully-missing step per object
// Generation is a pure function of (glyphs, config, scenario, seed).

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dive/core/rng.hpp"
#include "dive/data/elastic.hpp"
#include "dive/data/glyphs.hpp"

namespace dive {

enum class Scenario : std::uint8_t {
    none = 0,
    partial_occlusion = 1,
    out_of_scene = 2,
    varying_appearance = 3,
};

inline Scenario scenario_from_int(int s) {
    if (s < 1 || s > 3) throw std::invalid_argument("scenario must be 1, 2 or 3");
    return Scenario(s);
}

struct ScenarioConfig {
    int num_objects = 2;
    int seq_len = 20;  // T; the first half is the input regime by default
    int frame_size = 64;
    double speed_min = 2.0, speed_max = 4.0;  // pixels/step
    int occlusion_rows = 32;                  // scenario 1
    int removal_t_min = 3, removal_t_max = 9; // scenario 2/3, 1-indexed input steps
    double elastic_alpha0 = 100.0;            // scenario 3, decays linearly to 0
    double elastic_sigma = 4.0;
};

/// Straight-line constant-speed trajectory; reflection off the frame edges
/// keeps the glyph box fully inside the frame.
struct Trajectory {
    double x0 = 0, y0 = 0;  // top-left corner of the glyph box at t=0
    double angle = 0;       // radians
    double speed = 0;       // pixels/step

    static double fold(double p, double range) {
        if (range <= 0) return 0;
        double m = std::fmod(p, 2 * range);
        if (m < 0) m += 2 * range;
        return range - std::abs(m - range);
    }

    /// Position (top-left) at integer step t >= 0.
    void at(int t, double range, double& x, double& y) const {
        x = fold(x0 + speed * std::cos(angle) * t, range);
        y = fold(y0 + speed * std::sin(angle) * t, range);
    }
};

struct ObjectTrack {
    int glyph_index = 0;
    Trajectory traj;
};

struct VideoSample {
    Scenario scenario = Scenario::none;
    std::uint64_t seed = 0;
    int num_objects = 0, seq_len = 0, frame_size = 0;

    std::vector<float> corrupted;       // T * F * F
    std::vector<float> complete;        // T * F * F
    std::vector<std::uint8_t> missing;  // N * T; 1 = removed or fully hidden
    std::vector<float> layers;          // N * T * F * F, complete per-object
    std::vector<ObjectTrack> tracks;

    int pixels_per_frame() const { return frame_size * frame_size; }

    float* frame(std::vector<float>& s, int t) {
        return s.data() + std::size_t(t) * pixels_per_frame();
    }
    const float* frame(const std::vector<float>& s, int t) const {
        return s.data() + std::size_t(t) * pixels_per_frame();
    }
    float* layer(int i, int t) {
        return layers.data() + (std::size_t(i) * seq_len + t) * pixels_per_frame();
    }
    const float* layer(int i, int t) const {
        return layers.data() + (std::size_t(i) * seq_len + t) * pixels_per_frame();
    }
    std::uint8_t& missing_at(int i, int t) { return missing[std::size_t(i) * seq_len + t]; }
    std::uint8_t missing_at(int i, int t) const { return missing[std::size_t(i) * seq_len + t]; }
};

namespace scenario_detail {

/// Bilinear splat of a glyph at a fractional top-left position (zero
/// outside the glyph box).
inline void splat_glyph(const float* glyph, int gs, float* frame, int fs, double px, double py) {
    const int x_lo = std::max(0, int(std::floor(px)));
    const int y_lo = std::max(0, int(std::floor(py)));
    const int x_hi = std::min(fs - 1, int(std::ceil(px)) + gs - 1);
    const int y_hi = std::min(fs - 1, int(std::ceil(py)) + gs - 1);
    auto at = [&](int gy, int gx) -> double {
        return (gy >= 0 && gy < gs && gx >= 0 && gx < gs) ? double(glyph[gy * gs + gx]) : 0.0;
    };
    for (int y = y_lo; y <= y_hi; ++y)
        for (int x = x_lo; x <= x_hi; ++x) {
            const double sx = x - px, sy = y - py;
            const double xf = std::floor(sx), yf = std::floor(sy);
            const double fx = sx - xf, fy = sy - yf;
            const int gx = int(xf), gy = int(yf);
            const double v = (1 - fy) * ((1 - fx) * at(gy, gx) + fx * at(gy, gx + 1)) +
                             fy * ((1 - fx) * at(gy + 1, gx) + fx * at(gy + 1, gx + 1));
            frame[y * fs + x] = float(v);
        }
}

constexpr float kSupportThreshold = 0.1f;

/// True when the object's visible support lies entirely inside rows
/// [0, occl_rows) — i.e. the occlusion hides it completely.
inline bool support_inside_rows(const float* layer, int fs, int occl_rows) {
    bool any = false;
    for (int y = 0; y < fs; ++y)
        for (int x = 0; x < fs; ++x)
            if (layer[y * fs + x] > kSupportThreshold) {
                if (y >= occl_rows) return false;
                any = true;
            }
    return any;
}

}  // namespace scenario_detail

/// Re-renders layers, complete and corrupted(=complete) from s.tracks,
/// zeroing the mask. The uncorrupted baseline for every scenario.
inline void render_clean_from_tracks(VideoSample& s, const GlyphSet& glyphs,
                                     const ScenarioConfig& cfg) {
    const int px = s.pixels_per_frame();
    s.complete.assign(std::size_t(s.seq_len) * px, 0.f);
    s.missing.assign(std::size_t(s.num_objects) * s.seq_len, 0);
    s.layers.assign(std::size_t(s.num_objects) * s.seq_len * px, 0.f);

    const double range = cfg.frame_size - kGlyphSize;
    for (int i = 0; i < s.num_objects; ++i) {
        const auto& glyph = glyphs.at(s.tracks[i].glyph_index).pixels;
        for (int t = 0; t < s.seq_len; ++t) {
            double x, y;
            s.tracks[i].traj.at(t, range, x, y);
            scenario_detail::splat_glyph(glyph.data(), kGlyphSize, s.layer(i, t),
                                         cfg.frame_size, x, y);
        }
    }
    for (int t = 0; t < s.seq_len; ++t) {
        float* f = s.frame(s.complete, t);
        for (int i = 0; i < s.num_objects; ++i) {
            const float* l = s.layer(i, t);
            for (int p = 0; p < px; ++p) f[p] = std::max(f[p], l[p]);
        }
    }
    s.corrupted = s.complete;
}

/// Uncorrupted sample: straight-line bouncing digits, per-pixel max
/// compositing, mask all zeros, corrupted == complete.
inline VideoSample synthesize_clean(const GlyphSet& glyphs, const ScenarioConfig& cfg,
                                    int num_objects, int seq_len, std::uint64_t seed) {
    if (num_objects < 1) throw std::invalid_argument("num_objects must be >= 1");
    if (seq_len < 2) throw std::invalid_argument("seq_len must be >= 2");

    VideoSample s;
    s.scenario = Scenario::none;
    s.seed = seed;
    s.num_objects = num_objects;
    s.seq_len = seq_len;
    s.frame_size = cfg.frame_size;

    const double range = cfg.frame_size - kGlyphSize;
    Rng rng = Rng::stream(seed, 0x5CE7E);
    for (int i = 0; i < num_objects; ++i) {
        ObjectTrack tr;
        tr.glyph_index = rng.uniform_int(0, glyphs.count() - 1);
        tr.traj.x0 = rng.uniform(0, range);
        tr.traj.y0 = rng.uniform(0, range);
        tr.traj.angle = rng.uniform(0, 2 * 3.14159265358979);
        tr.traj.speed = rng.uniform(cfg.speed_min, cfg.speed_max);
        s.tracks.push_back(tr);
    }
    render_clean_from_tracks(s, glyphs, cfg);
    return s;
}

inline void apply_partial_occlusion(VideoSample& s, const ScenarioConfig& cfg) {
    s.scenario = Scenario::partial_occlusion;
    const int fs = s.frame_size;
    for (int t = 0; t < s.seq_len; ++t) {
        float* f = s.frame(s.corrupted, t);
        std::fill(f, f + cfg.occlusion_rows * fs, 0.f);
        for (int i = 0; i < s.num_objects; ++i)
            s.missing_at(i, t) = scenario_detail::support_inside_rows(s.layer(i, t), fs,
                                                                      cfg.occlusion_rows)
                                     ? 1
                                     : 0;
    }
}

namespace scenario_detail {

/// Rebuilds the corrupted stream as the per-pixel max over non-removed
/// object layers.
inline void recomposite_corrupted(VideoSample& s) {
    const int px = s.pixels_per_frame();
    for (int t = 0; t < s.seq_len; ++t) {
        float* f = s.frame(s.corrupted, t);
        std::fill(f, f + px, 0.f);
        for (int i = 0; i < s.num_objects; ++i) {
            if (s.missing_at(i, t)) continue;
            const float* l = s.layer(i, t);
            for (int p = 0; p < px; ++p) f[p] = std::max(f[p], l[p]);
        }
    }
}

}  // namespace scenario_detail

/// Scenario 2: per object, an initial step t' drawn uniformly from the
/// 1-indexed range [removal_t_min, removal_t_max]; the object is removed
/// from the corrupted stream at steps t' and t'+1.
inline void apply_out_of_scene(VideoSample& s, const ScenarioConfig& cfg, Rng& rng) {
    if (s.seq_len < cfg.removal_t_max + 2)
        throw std::invalid_argument("sequence too short for out-of-scene removal");
    s.scenario = Scenario::out_of_scene;
    for (int i = 0; i < s.num_objects; ++i) {
        const int t1 = rng.uniform_int(cfg.removal_t_min, cfg.removal_t_max);  // 1-indexed
        s.missing_at(i, t1 - 1) = 1;
        s.missing_at(i, t1) = 1;
    }
    scenario_detail::recomposite_corrupted(s);
}

/// Scenario 3: fixed per-object displacement field, intensity
/// alpha(t) = alpha0 * (1 - (t-1)/(T-1)) applied to BOTH streams (the
/// deformation is an appearance change, not a corruption), plus one
/// fully-missing step per object in the corrupted stream.
inline void apply_varying_appearance(VideoSample& s, const GlyphSet& glyphs,
                                     const ScenarioConfig& cfg, Rng& rng) {
    if (s.seq_len < cfg.removal_t_max + 2)
        throw std::invalid_argument("sequence too short for varying-appearance removal");
    s.scenario = Scenario::varying_appearance;
    const int fs = s.frame_size, px = s.pixels_per_frame();
    const double range = fs - kGlyphSize;

    for (int i = 0; i < s.num_objects; ++i) {
        const auto field = make_displacement_field(
            kGlyphSize, cfg.elastic_sigma, mix_seed({s.seed, 0xF1E1DULL, std::uint64_t(i)}));
        const auto& glyph = glyphs.at(s.tracks[i].glyph_index).pixels;
        for (int t = 0; t < s.seq_len; ++t) {
            const double alpha = cfg.elastic_alpha0 * (1.0 - double(t) / (s.seq_len - 1));
            const auto warped = elastic_warp(glyph, field, alpha);
            float* l = s.layer(i, t);
            std::fill(l, l + px, 0.f);
            double x, y;
            s.tracks[i].traj.at(t, range, x, y);
            scenario_detail::splat_glyph(warped.data(), kGlyphSize, l, fs, x, y);
        }
    }
    // complete stream carries the deformation too
    for (int t = 0; t < s.seq_len; ++t) {
        float* f = s.frame(s.complete, t);
        std::fill(f, f + px, 0.f);
        for (int i = 0; i < s.num_objects; ++i) {
            const float* l = s.layer(i, t);
            for (int p = 0; p < px; ++p) f[p] = std::max(f[p], l[p]);
        }
    }
    for (int i = 0; i < s.num_objects; ++i) {
        const int t1 = rng.uniform_int(cfg.removal_t_min, cfg.removal_t_max);
        s.missing_at(i, t1 - 1) = 1;
    }
    scenario_detail::recomposite_corrupted(s);
}

/// One-shot generator: pure function of (glyphs, cfg, scenario, seed).
inline VideoSample make_sample(const GlyphSet& glyphs, const ScenarioConfig& cfg,
                               Scenario scenario, std::uint64_t seed) {
    VideoSample s = synthesize_clean(glyphs, cfg, cfg.num_objects, cfg.seq_len, seed);
    Rng corrupt_rng = Rng::stream(seed, 0xC0412);
    switch (scenario) {
        case Scenario::none:
            break;
        case Scenario::partial_occlusion:
            apply_partial_occlusion(s, cfg);
            break;
        case Scenario::out_of_scene:
            apply_out_of_scene(s, cfg, corrupt_rng);
            break;
        case Scenario::varying_appearance:
            apply_varying_appearance(s, glyphs, cfg, corrupt_rng);
            break;
    }
    return s;
}

}  // namespace dive
