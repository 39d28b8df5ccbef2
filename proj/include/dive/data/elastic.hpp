// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Elastic deformation: a per-pixel uniform random displacement field,
// Gaussian-smoothed with std sigma, scaled by alpha and added to the
// sampling grid. alpha = 0 reproduces the input exactly.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dive/core/rng.hpp"

namespace dive {

struct ElasticDeformParams {
    double alpha = 100.0;  // deformation intensity, pixels
    double sigma = 4.0;    // field smoothing, pixels
    std::uint64_t field_seed = 0;
};

/// Smoothed unit displacement field (x and y components), |side|^2 each.
struct DisplacementField {
    int side = 0;
    std::vector<float> dx, dy;
};

namespace elastic_detail {

// zero-padded separable Gaussian blur, kernel normalized to unit full sum
inline void gaussian_smooth(std::vector<float>& f, int n, double sigma) {
    const int rad = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * rad + 1);
    double ksum = 0;
    for (int i = -rad; i <= rad; ++i) {
        k[i + rad] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        ksum += k[i + rad];
    }
    for (auto& x : k) x /= ksum;

    std::vector<float> tmp(f.size());
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double acc = 0;
            for (int i = -rad; i <= rad; ++i) {
                const int xx = x + i;
                if (xx >= 0 && xx < n) acc += k[i + rad] * f[y * n + xx];
            }
            tmp[y * n + x] = float(acc);
        }
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            double acc = 0;
            for (int i = -rad; i <= rad; ++i) {
                const int yy = y + i;
                if (yy >= 0 && yy < n) acc += k[i + rad] * tmp[yy * n + x];
            }
            f[y * n + x] = float(acc);
        }
}

}  // namespace elastic_detail

inline DisplacementField make_displacement_field(int side, double sigma,
                                                 std::uint64_t field_seed) {
    if (sigma <= 0) throw std::invalid_argument("elastic: sigma must be > 0");
    DisplacementField df;
    df.side = side;
    df.dx.resize(std::size_t(side) * side);
    df.dy.resize(std::size_t(side) * side);
    Rng rng(mix_seed({0xE1A57ULL, field_seed}));
    for (auto& v : df.dx) v = float(rng.uniform(-1.0, 1.0));
    for (auto& v : df.dy) v = float(rng.uniform(-1.0, 1.0));
    elastic_detail::gaussian_smooth(df.dx, side, sigma);
    elastic_detail::gaussian_smooth(df.dy, side, sigma);
    return df;
}

/// Warps `img` (side x side, [0,1]) through `alpha * field`.
inline std::vector<float> elastic_warp(const std::vector<float>& img,
                                       const DisplacementField& df, double alpha) {
    if (alpha < 0) throw std::invalid_argument("elastic: alpha must be >= 0");
    const int n = df.side;
    if (img.size() != std::size_t(n) * n) throw std::invalid_argument("elastic: size mismatch");
    if (alpha == 0.0) return img;
    std::vector<float> out(img.size());
    auto at = [&](int y, int x) -> double {
        return (y >= 0 && y < n && x >= 0 && x < n) ? double(img[y * n + x]) : 0.0;
    };
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double sx = x + alpha * df.dx[y * n + x];
            const double sy = y + alpha * df.dy[y * n + x];
            const double xf = std::floor(sx), yf = std::floor(sy);
            const double fx = sx - xf, fy = sy - yf;
            const int x0 = int(xf), y0 = int(yf);
            const double v = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                             fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
            out[y * n + x] = float(v);
        }
    return out;
}

/// One-call form matching the library surface.
inline std::vector<float> elastic_deform(const std::vector<float>& img, int side,
                                         const ElasticDeformParams& p) {
    return elastic_warp(img, make_displacement_field(side, p.sigma, p.field_seed), p.alpha);
}

}  // namespace dive
