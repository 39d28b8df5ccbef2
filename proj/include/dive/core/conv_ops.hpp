// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Strided conv / transposed-conv tape ops via im2col + GEMM. Activations
// travel as [batch, C*H*W] rows; geometry is carried by the op.

#pragma once

#include "dive/core/graph.hpp"

namespace dive {

struct ConvGeom {
    int in_ch = 1, in_h = 0, in_w = 0;
    int out_ch = 1, kernel = 4, stride = 2, pad = 1;

    int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
    int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
    // transposed-conv output size for the same parameters
    int tr_out_h() const { return (in_h - 1) * stride - 2 * pad + kernel; }
    int tr_out_w() const { return (in_w - 1) * stride - 2 * pad + kernel; }
};

namespace detail {

// columns: [out_h*out_w, in_ch*k*k] for one image (zero padding).
template <typename S>
void im2col(const S* img, const ConvGeom& cg, S* cols) {
    const int oh = cg.out_h(), ow = cg.out_w(), k = cg.kernel;
    const int ckk = cg.in_ch * k * k;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            S* row = cols + std::size_t(oy * ow + ox) * ckk;
            int idx = 0;
            for (int c = 0; c < cg.in_ch; ++c) {
                const S* plane = img + std::size_t(c) * cg.in_h * cg.in_w;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * cg.stride - cg.pad + ky;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ox * cg.stride - cg.pad + kx;
                        row[idx++] = (iy >= 0 && iy < cg.in_h && ix >= 0 && ix < cg.in_w)
                                         ? plane[iy * cg.in_w + ix]
                                         : S(0);
                    }
                }
            }
        }
    }
}

template <typename S>
void col2im_add(const S* cols, const ConvGeom& cg, S* img) {
    const int oh = cg.out_h(), ow = cg.out_w(), k = cg.kernel;
    const int ckk = cg.in_ch * k * k;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const S* row = cols + std::size_t(oy * ow + ox) * ckk;
            int idx = 0;
            for (int c = 0; c < cg.in_ch; ++c) {
                S* plane = img + std::size_t(c) * cg.in_h * cg.in_w;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * cg.stride - cg.pad + ky;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ox * cg.stride - cg.pad + kx;
                        if (iy >= 0 && iy < cg.in_h && ix >= 0 && ix < cg.in_w)
                            plane[iy * cg.in_w + ix] += row[idx];
                        ++idx;
                    }
                }
            }
        }
    }
}

}  // namespace detail

/// conv2d: x [B, in_ch*H*W], W [out_ch, in_ch*k*k], b [1, out_ch]
/// -> [B, out_ch*OH*OW].
template <typename S>
Ref conv2d(GraphT<S>& g, Ref x, Ref W, Ref b, const ConvGeom& cg) {
    const auto& vx = g.val(x);
    const int B = vx.rows, oh = cg.out_h(), ow = cg.out_w();
    const int pos = oh * ow, ckk = cg.in_ch * cg.kernel * cg.kernel;
    Ref out = g.make(B, cg.out_ch * pos, detail::wants_grad(g, {x, W, b}));
    auto& vo = g.val(out);

    // im2col is kept for the backward pass (dW reuses it).
    auto cols = std::make_shared<TensorT<S>>(B * pos, ckk);
    TensorT<S> prod(pos, cg.out_ch);
    for (int bi = 0; bi < B; ++bi) {
        S* cb = cols->data() + std::size_t(bi) * pos * ckk;
        detail::im2col(&vx(bi, 0), cg, cb);
        Eigen::Map<EMat<S>> cm(cb, pos, ckk);
        as_mat(prod).noalias() = cm * as_mat(g.val(W)).transpose();
        // [pos, out_ch] -> channel-major layout
        for (int c = 0; c < cg.out_ch; ++c) {
            const S bias = g.val(b)(0, c);
            for (int p = 0; p < pos; ++p) vo(bi, c * pos + p) = prod(p, c) + bias;
        }
    }
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, W, b, cg, cols](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            const int B2 = d.rows, oh2 = cg.out_h(), ow2 = cg.out_w();
            const int pos2 = oh2 * ow2, ckk2 = cg.in_ch * cg.kernel * cg.kernel;
            const bool need_x = gr.node(x.id).needs_grad;
            const bool need_w = gr.node(W.id).needs_grad;
            const bool need_b = gr.node(b.id).needs_grad;
            TensorT<S> dprod(pos2, cg.out_ch), dcols(pos2, ckk2);
            for (int bi = 0; bi < B2; ++bi) {
                for (int c = 0; c < cg.out_ch; ++c)
                    for (int p = 0; p < pos2; ++p) dprod(p, c) = d(bi, c * pos2 + p);
                Eigen::Map<const EMat<S>> cm(cols->data() + std::size_t(bi) * pos2 * ckk2,
                                             pos2, ckk2);
                if (need_w)
                    as_mat(gr.grad_buf(W.id)).noalias() += as_mat(dprod).transpose() * cm;
                if (need_b)
                    as_mat(gr.grad_buf(b.id)).row(0) += as_mat(dprod).colwise().sum();
                if (need_x) {
                    as_mat(dcols).noalias() = as_mat(dprod) * as_mat(gr.val(W));
                    detail::col2im_add(dcols.data(), cg, &gr.grad_buf(x.id)(bi, 0));
                }
            }
        });
    return out;
}

/// Transposed conv: x [B, in_ch*H*W], W [in_ch, out_ch*k*k], b [1, out_ch]
/// -> [B, out_ch*TOH*TOW]. Exact adjoint of conv2d with swapped roles.
template <typename S>
Ref deconv2d(GraphT<S>& g, Ref x, Ref W, Ref b, const ConvGeom& cg) {
    const auto& vx = g.val(x);
    const int B = vx.rows, toh = cg.tr_out_h(), tow = cg.tr_out_w();
    const int in_pos = cg.in_h * cg.in_w;
    const int okk = cg.out_ch * cg.kernel * cg.kernel;
    Ref out = g.make(B, cg.out_ch * toh * tow, detail::wants_grad(g, {x, W, b}));
    auto& vo = g.val(out);

    // Geometry of the adjoint forward conv (output -> input).
    ConvGeom adj{cg.out_ch, toh, tow, cg.in_ch, cg.kernel, cg.stride, cg.pad};

    TensorT<S> xrows(in_pos, cg.in_ch), cols(in_pos, okk);
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < cg.in_ch; ++c)
            for (int p = 0; p < in_pos; ++p) xrows(p, c) = vx(bi, c * in_pos + p);
        as_mat(cols).noalias() = as_mat(xrows) * as_mat(g.val(W));
        S* ob = &vo(bi, 0);
        // note: col2im geometry uses adj (cols indexed by input positions)
        detail::col2im_add(cols.data(), adj, ob);
        for (int c = 0; c < cg.out_ch; ++c) {
            const S bias = g.val(b)(0, c);
            S* plane = ob + std::size_t(c) * toh * tow;
            for (int p = 0; p < toh * tow; ++p) plane[p] += bias;
        }
    }
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, W, b, cg, adj](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            const int B2 = d.rows, in_pos2 = cg.in_h * cg.in_w;
            const int okk2 = cg.out_ch * cg.kernel * cg.kernel;
            const int out_pix = cg.out_ch * cg.tr_out_h() * cg.tr_out_w();
            const bool need_x = gr.node(x.id).needs_grad;
            const bool need_w = gr.node(W.id).needs_grad;
            const bool need_b = gr.node(b.id).needs_grad;
            const auto& vx2 = gr.val(x);
            TensorT<S> dcols(in_pos2, okk2), dxrows(in_pos2, cg.in_ch), xrows2(in_pos2, cg.in_ch);
            for (int bi = 0; bi < B2; ++bi) {
                detail::im2col(&d(bi, 0), adj, dcols.data());
                if (need_x) {
                    as_mat(dxrows).noalias() = as_mat(dcols) * as_mat(gr.val(W)).transpose();
                    auto& gx = gr.grad_buf(x.id);
                    for (int c = 0; c < cg.in_ch; ++c)
                        for (int p = 0; p < in_pos2; ++p) gx(bi, c * in_pos2 + p) += dxrows(p, c);
                }
                if (need_w) {
                    for (int c = 0; c < cg.in_ch; ++c)
                        for (int p = 0; p < in_pos2; ++p) xrows2(p, c) = vx2(bi, c * in_pos2 + p);
                    as_mat(gr.grad_buf(W.id)).noalias() +=
                        as_mat(xrows2).transpose() * as_mat(dcols);
                }
                if (need_b) {
                    auto& gb = gr.grad_buf(b.id);
                    const S* db = &d(bi, 0);
                    const int plane = cg.tr_out_h() * cg.tr_out_w();
                    for (int c = 0; c < cg.out_ch; ++c) {
                        S acc = S(0);
                        for (int p = 0; p < plane; ++p) acc += db[c * plane + p];
                        gb(0, c) += acc;
                    }
                }
            }
            (void)out_pix;
        });
    return out;
}

}  // namespace dive
