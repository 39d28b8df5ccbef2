// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable affine spatial transformer restricted to isotropic
// scale + translation (a pose is exactly [tx, ty, scale]). `place` maps a
// G x G glimpse into an F x F frame, `extract` is its inverse. Both use
// bilinear interpolation with zero padding and carry gradients to the
// source pixels and to the pose.

#pragma once

#include <atomic>

#include "dive/core/graph.hpp"

namespace dive {

struct PoseBounds {
    double scale_min = 0.15;
    double scale_max = 1.0;
};

/// Count of pose components that had to be clamped into bounds inside the
/// transformer ops (should stay 0 when poses come from the model's squash).
inline std::atomic<long>& pose_clamp_count() {
    static std::atomic<long> n{0};
    return n;
}

namespace stn {

/// Bilinear read with zero padding; out-of-range corners contribute 0.
/// Optionally returns the value's partial derivatives w.r.t. (u, v).
template <typename S>
S sample_bilinear(const S* img, int h, int w, double u, double v, double* du = nullptr,
                  double* dv = nullptr) {
    const double uf = std::floor(u), vf = std::floor(v);
    const int u0 = int(uf), v0 = int(vf);
    const double fu = u - uf, fv = v - vf;
    auto at = [&](int r, int c) -> double {
        return (r >= 0 && r < h && c >= 0 && c < w) ? double(img[r * w + c]) : 0.0;
    };
    const double p00 = at(v0, u0), p01 = at(v0, u0 + 1);
    const double p10 = at(v0 + 1, u0), p11 = at(v0 + 1, u0 + 1);
    if (du) *du = (1 - fv) * (p01 - p00) + fv * (p11 - p10);
    if (dv) *dv = (1 - fu) * (p10 - p00) + fu * (p11 - p01);
    return S((1 - fv) * ((1 - fu) * p00 + fu * p01) + fv * ((1 - fu) * p10 + fu * p11));
}

/// Scatter a gradient through the same four bilinear taps.
template <typename S>
void scatter_bilinear(S* gimg, int h, int w, double u, double v, S gout) {
    const double uf = std::floor(u), vf = std::floor(v);
    const int u0 = int(uf), v0 = int(vf);
    const S fu = S(u - uf), fv = S(v - vf);
    auto addat = [&](int r, int c, S wgt) {
        if (r >= 0 && r < h && c >= 0 && c < w) gimg[r * w + c] += gout * wgt;
    };
    addat(v0, u0, (S(1) - fv) * (S(1) - fu));
    addat(v0, u0 + 1, (S(1) - fv) * fu);
    addat(v0 + 1, u0, fv * (S(1) - fu));
    addat(v0 + 1, u0 + 1, fv * fu);
}

inline double to_pixel(double coord, int extent) { return (coord + 1.0) * 0.5 * (extent - 1); }

template <typename S>
void read_pose(const TensorT<S>& pose, int row, const PoseBounds& pb, double& tx, double& ty,
               double& sc) {
    tx = double(pose(row, 0));
    ty = double(pose(row, 1));
    sc = double(pose(row, 2));
    auto clamp1 = [](double& x, double lo, double hi) {
        if (x < lo || x > hi) {
            x = std::min(std::max(x, lo), hi);
            pose_clamp_count()++;
        }
    };
    clamp1(tx, -1.0, 1.0);
    clamp1(ty, -1.0, 1.0);
    clamp1(sc, std::max(pb.scale_min, 1e-3), pb.scale_max);
}

// Plain (tape-free) forward paths, shared by the ops and by evaluation code.

template <typename S>
void place_one(const S* glimpse, int G, S* frame, int F, double tx, double ty, double sc) {
    for (int fi = 0; fi < F; ++fi) {
        const double yf = 2.0 * fi / (F - 1) - 1.0;
        const double yg = (yf - ty) / sc;
        const double v = to_pixel(yg, G);
        for (int fj = 0; fj < F; ++fj) {
            const double xf = 2.0 * fj / (F - 1) - 1.0;
            const double xg = (xf - tx) / sc;
            frame[fi * F + fj] = sample_bilinear<S>(glimpse, G, G, to_pixel(xg, G), v);
        }
    }
}

template <typename S>
void extract_one(const S* frame, int F, S* glimpse, int G, double tx, double ty, double sc) {
    for (int gi = 0; gi < G; ++gi) {
        const double yg = 2.0 * gi / (G - 1) - 1.0;
        const double v = to_pixel(sc * yg + ty, F);
        for (int gj = 0; gj < G; ++gj) {
            const double xg = 2.0 * gj / (G - 1) - 1.0;
            glimpse[gi * G + gj] = sample_bilinear<S>(frame, F, F, to_pixel(sc * xg + tx, F), v);
        }
    }
}

}  // namespace stn

/// T(glimpse; pose): resample a [B, G*G] glimpse into a [B, F*F] frame of
/// zeros at the location/scale given by pose [B, 3] = (tx, ty, scale).
template <typename S>
Ref st_place(GraphT<S>& g, Ref glimpse, Ref pose, int G, int F,
             const PoseBounds& pb = PoseBounds{}) {
    const auto& vg = g.val(glimpse);
    const auto& vp = g.val(pose);
    const int B = vg.rows;
    Ref out = g.make(B, F * F, detail::wants_grad(g, {glimpse, pose}));
    auto& vo = g.val(out);
    for (int bi = 0; bi < B; ++bi) {
        double tx, ty, sc;
        stn::read_pose(vp, bi, pb, tx, ty, sc);
        stn::place_one(&vg(bi, 0), G, &vo(bi, 0), F, tx, ty, sc);
    }
    if (g.node(out.id).needs_grad)
        g.set_back(out, [glimpse, pose, G, F, pb](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            const auto& vg2 = gr.val(glimpse);
            const auto& vp2 = gr.val(pose);
            const bool need_src = gr.node(glimpse.id).needs_grad;
            const bool need_pose = gr.node(pose.id).needs_grad;
            for (int bi = 0; bi < d.rows; ++bi) {
                double tx, ty, sc;
                stn::read_pose(vp2, bi, pb, tx, ty, sc);
                double gtx = 0, gty = 0, gsc = 0;
                for (int fi = 0; fi < F; ++fi) {
                    const double yf = 2.0 * fi / (F - 1) - 1.0;
                    const double yg = (yf - ty) / sc;
                    const double v = stn::to_pixel(yg, G);
                    for (int fj = 0; fj < F; ++fj) {
                        const S go = d(bi, fi * F + fj);
                        if (go == S(0)) continue;
                        const double xf = 2.0 * fj / (F - 1) - 1.0;
                        const double xg = (xf - tx) / sc;
                        const double u = stn::to_pixel(xg, G);
                        if (need_src)
                            stn::scatter_bilinear(&gr.grad_buf(glimpse.id)(bi, 0), G, G, u, v, go);
                        if (need_pose) {
                            double du, dv;
                            stn::sample_bilinear<S>(&vg2(bi, 0), G, G, u, v, &du, &dv);
                            const double half = 0.5 * (G - 1);
                            // u = ((xf - tx)/sc + 1) * half
                            gtx += double(go) * du * (-half / sc);
                            gty += double(go) * dv * (-half / sc);
                            gsc += double(go) * (du * (-(xf - tx) / (sc * sc)) * half +
                                                 dv * (-(yf - ty) / (sc * sc)) * half);
                        }
                    }
                }
                if (need_pose) {
                    auto& gp = gr.grad_buf(pose.id);
                    gp(bi, 0) += S(gtx);
                    gp(bi, 1) += S(gty);
                    gp(bi, 2) += S(gsc);
                }
            }
        });
    return out;
}

/// T^{-1}(frame; pose): crop/rectify a [B, F*F] frame into a [B, G*G]
/// glimpse centered at the pose.
template <typename S>
Ref st_extract(GraphT<S>& g, Ref frame, Ref pose, int F, int G,
               const PoseBounds& pb = PoseBounds{}) {
    const auto& vf = g.val(frame);
    const auto& vp = g.val(pose);
    const int B = vf.rows;
    Ref out = g.make(B, G * G, detail::wants_grad(g, {frame, pose}));
    auto& vo = g.val(out);
    for (int bi = 0; bi < B; ++bi) {
        double tx, ty, sc;
        stn::read_pose(vp, bi, pb, tx, ty, sc);
        stn::extract_one(&vf(bi, 0), F, &vo(bi, 0), G, tx, ty, sc);
    }
    if (g.node(out.id).needs_grad)
        g.set_back(out, [frame, pose, F, G, pb](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            const auto& vf2 = gr.val(frame);
            const auto& vp2 = gr.val(pose);
            const bool need_src = gr.node(frame.id).needs_grad;
            const bool need_pose = gr.node(pose.id).needs_grad;
            for (int bi = 0; bi < d.rows; ++bi) {
                double tx, ty, sc;
                stn::read_pose(vp2, bi, pb, tx, ty, sc);
                double gtx = 0, gty = 0, gsc = 0;
                for (int gi = 0; gi < G; ++gi) {
                    const double yg = 2.0 * gi / (G - 1) - 1.0;
                    const double v = stn::to_pixel(sc * yg + ty, F);
                    for (int gj = 0; gj < G; ++gj) {
                        const S go = d(bi, gi * G + gj);
                        if (go == S(0)) continue;
                        const double xg = 2.0 * gj / (G - 1) - 1.0;
                        const double u = stn::to_pixel(sc * xg + tx, F);
                        if (need_src)
                            stn::scatter_bilinear(&gr.grad_buf(frame.id)(bi, 0), F, F, u, v, go);
                        if (need_pose) {
                            double du, dv;
                            stn::sample_bilinear<S>(&vf2(bi, 0), F, F, u, v, &du, &dv);
                            const double half = 0.5 * (F - 1);
                            // u = (sc*xg + tx + 1) * half
                            gtx += double(go) * du * half;
                            gty += double(go) * dv * half;
                            gsc += double(go) * (du * xg + dv * yg) * half;
                        }
                    }
                }
                if (need_pose) {
                    auto& gp = gr.grad_buf(pose.id);
                    gp(bi, 0) += S(gtx);
                    gp(bi, 1) += S(gty);
                    gp(bi, 2) += S(gsc);
                }
            }
        });
    return out;
}

}  // namespace dive
