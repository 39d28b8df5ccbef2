// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode autodiff on a flat tape. One GraphT is built per forward
// pass; nodes are created in topological order and walked backwards once.
// Ops are deliberately batched (row = batch element) so the tape stays
// small and the work lives inside Eigen GEMMs.

#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "dive/core/tensor.hpp"

namespace dive {

template <typename S>
struct ParamT {
    std::string name;
    TensorT<S> value;
    TensorT<S> grad;
    // tape memoization (one leaf node per graph per param)
    std::uint64_t seen_graph = ~0ULL;
    int node_id = -1;

    ParamT() = default;
    ParamT(std::string n, int r, int c) : name(std::move(n)), value(r, c), grad(r, c) {}
    void zero_grad() { grad.fill(S(0)); }
};

struct Ref {
    int id = -1;
    bool valid() const { return id >= 0; }
};

template <typename S>
class GraphT {
public:
    struct Node {
        TensorT<S> val;
        TensorT<S> grad;  // allocated on first contribution
        std::function<void(GraphT&, int)> back;
        ParamT<S>* param = nullptr;
        bool needs_grad = false;
    };

    GraphT() : serial_(next_serial()++) {}

    std::uint64_t serial() const { return serial_; }
    int size() const { return int(nodes_.size()); }

    const TensorT<S>& val(Ref r) const { return nodes_[r.id].val; }
    TensorT<S>& val(Ref r) { return nodes_[r.id].val; }
    const TensorT<S>& grad(Ref r) const { return nodes_[r.id].grad; }

    /// Gradient buffer of node `id`, allocated (zeroed) on first use.
    TensorT<S>& grad_buf(int id) {
        Node& n = nodes_[id];
        if (n.grad.v.empty()) n.grad.resize(n.val.rows, n.val.cols);
        return n.grad;
    }
    bool has_grad(int id) const { return !nodes_[id].grad.v.empty(); }

    // --- node creation -----------------------------------------------------

    Ref make(int rows, int cols, bool needs_grad) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.val.resize(rows, cols);
        n.needs_grad = needs_grad;
        return Ref{int(nodes_.size()) - 1};
    }

    void set_back(Ref r, std::function<void(GraphT&, int)> fn) {
        nodes_[r.id].back = std::move(fn);
    }

    /// Constant leaf (no gradient).
    Ref input(TensorT<S> t) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.val = std::move(t);
        n.needs_grad = false;
        return Ref{int(nodes_.size()) - 1};
    }

    /// Parameter leaf; memoized so repeated use shares one node.
    Ref param(ParamT<S>& p) {
        if (p.seen_graph == serial_) return Ref{p.node_id};
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.val = p.value;
        n.needs_grad = true;
        n.param = &p;
        p.seen_graph = serial_;
        p.node_id = int(nodes_.size()) - 1;
        return Ref{p.node_id};
    }

    // --- backward ----------------------------------------------------------

    /// Backpropagates from a scalar node. Parameter gradients accumulate
    /// into ParamT::grad (callers zero them between steps).
    void backward(Ref loss) {
        TensorT<S>& g = grad_buf(loss.id);
        g.fill(S(0));
        g.v[0] = S(1);
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.grad.v.empty()) continue;
            if (n.back) n.back(*this, i);
            if (n.param) as_mat(n.param->grad) += as_mat(n.grad);
        }
    }

    Node& node(int id) { return nodes_[id]; }

private:
    static std::uint64_t& next_serial() {
        static std::uint64_t s = 1;
        return s;
    }

    // deque: node references stay valid while the tape grows
    std::deque<Node> nodes_;
    std::uint64_t serial_;
};

// --- elementwise / structural ops -------------------------------------------

namespace detail {
template <typename S>
bool wants_grad(GraphT<S>& g, std::initializer_list<Ref> parents) {
    for (Ref p : parents)
        if (g.node(p.id).needs_grad) return true;
    return false;
}
}  // namespace detail

template <typename S>
Ref add(GraphT<S>& g, Ref a, Ref b) {
    const auto& va = g.val(a);
    Ref out = g.make(va.rows, va.cols, detail::wants_grad(g, {a, b}));
    as_mat(g.val(out)) = as_mat(va) + as_mat(g.val(b));
    if (g.node(out.id).needs_grad)
        g.set_back(out, [a, b](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            if (gr.node(a.id).needs_grad) as_mat(gr.grad_buf(a.id)) += as_mat(d);
            if (gr.node(b.id).needs_grad) as_mat(gr.grad_buf(b.id)) += as_mat(d);
        });
    return out;
}

template <typename S>
Ref sub(GraphT<S>& g, Ref a, Ref b) {
    const auto& va = g.val(a);
    Ref out = g.make(va.rows, va.cols, detail::wants_grad(g, {a, b}));
    as_mat(g.val(out)) = as_mat(va) - as_mat(g.val(b));
    if (g.node(out.id).needs_grad)
        g.set_back(out, [a, b](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            if (gr.node(a.id).needs_grad) as_mat(gr.grad_buf(a.id)) += as_mat(d);
            if (gr.node(b.id).needs_grad) as_mat(gr.grad_buf(b.id)) -= as_mat(d);
        });
    return out;
}

template <typename S>
Ref mul(GraphT<S>& g, Ref a, Ref b) {
    const auto& va = g.val(a);
    Ref out = g.make(va.rows, va.cols, detail::wants_grad(g, {a, b}));
    as_mat(g.val(out)) = as_mat(va).cwiseProduct(as_mat(g.val(b)));
    if (g.node(out.id).needs_grad)
        g.set_back(out, [a, b](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            if (gr.node(a.id).needs_grad)
                as_mat(gr.grad_buf(a.id)) += as_mat(d).cwiseProduct(as_mat(gr.val(b)));
            if (gr.node(b.id).needs_grad)
                as_mat(gr.grad_buf(b.id)) += as_mat(d).cwiseProduct(as_mat(gr.val(a)));
        });
    return out;
}

template <typename S>
Ref scale(GraphT<S>& g, Ref x, S c) {
    const auto& vx = g.val(x);
    Ref out = g.make(vx.rows, vx.cols, g.node(x.id).needs_grad);
    as_mat(g.val(out)) = as_mat(vx) * c;
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, c](GraphT<S>& gr, int id) {
            as_mat(gr.grad_buf(x.id)) += as_mat(gr.node(id).grad) * c;
        });
    return out;
}

template <typename S>
Ref add_const(GraphT<S>& g, Ref x, S c) {
    const auto& vx = g.val(x);
    Ref out = g.make(vx.rows, vx.cols, g.node(x.id).needs_grad);
    as_mat(g.val(out)) = as_mat(vx).array() + c;
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x](GraphT<S>& gr, int id) {
            as_mat(gr.grad_buf(x.id)) += as_mat(gr.node(id).grad);
        });
    return out;
}

namespace detail {
template <typename S, typename F, typename DF>
Ref unary(GraphT<S>& g, Ref x, F f, DF df) {
    const auto& vx = g.val(x);
    Ref out = g.make(vx.rows, vx.cols, g.node(x.id).needs_grad);
    auto& vo = g.val(out);
    for (std::size_t i = 0; i < vx.v.size(); ++i) vo.v[i] = f(vx.v[i]);
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, df](GraphT<S>& gr, int id) {
            const auto& n = gr.node(id);
            auto& gx = gr.grad_buf(x.id);
            const auto& vx2 = gr.val(x);
            for (std::size_t i = 0; i < gx.v.size(); ++i)
                gx.v[i] += n.grad.v[i] * df(vx2.v[i], n.val.v[i]);
        });
    return out;
}
}  // namespace detail

template <typename S>
Ref tanh_(GraphT<S>& g, Ref x) {
    return detail::unary(
        g, x, [](S v) { return S(std::tanh(double(v))); },
        [](S, S y) { return S(1) - y * y; });
}

template <typename S>
Ref sigmoid_(GraphT<S>& g, Ref x) {
    return detail::unary(
        g, x, [](S v) { return S(1) / (S(1) + S(std::exp(double(-v)))); },
        [](S, S y) { return y * (S(1) - y); });
}

template <typename S>
Ref exp_(GraphT<S>& g, Ref x) {
    return detail::unary(
        g, x, [](S v) { return S(std::exp(double(v))); }, [](S, S y) { return y; });
}

template <typename S>
Ref relu_(GraphT<S>& g, Ref x) {
    return detail::unary(
        g, x, [](S v) { return v > S(0) ? v : S(0); },
        [](S v, S) { return v > S(0) ? S(1) : S(0); });
}

/// Clamp with exact (zero outside the interval) gradients. `clamps`, when
/// given, counts how many elements were saturated.
template <typename S>
Ref clamp_(GraphT<S>& g, Ref x, S lo, S hi, long* clamps = nullptr) {
    const auto& vx = g.val(x);
    Ref out = g.make(vx.rows, vx.cols, g.node(x.id).needs_grad);
    auto& vo = g.val(out);
    long n_clamped = 0;
    for (std::size_t i = 0; i < vx.v.size(); ++i) {
        S v = vx.v[i];
        if (v < lo) {
            vo.v[i] = lo;
            ++n_clamped;
        } else if (v > hi) {
            vo.v[i] = hi;
            ++n_clamped;
        } else {
            vo.v[i] = v;
        }
    }
    if (clamps) *clamps += n_clamped;
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, lo, hi](GraphT<S>& gr, int id) {
            const auto& n = gr.node(id);
            auto& gx = gr.grad_buf(x.id);
            const auto& vx2 = gr.val(x);
            for (std::size_t i = 0; i < gx.v.size(); ++i)
                if (vx2.v[i] >= lo && vx2.v[i] <= hi) gx.v[i] += n.grad.v[i];
        });
    return out;
}

/// Identity with a severed gradient.
template <typename S>
Ref detach(GraphT<S>& g, Ref x) {
    return g.input(g.val(x));
}

template <typename S>
Ref concat_cols(GraphT<S>& g, Ref a, Ref b) {
    const auto& va = g.val(a);
    const auto& vb = g.val(b);
    Ref out = g.make(va.rows, va.cols + vb.cols, detail::wants_grad(g, {a, b}));
    auto& vo = g.val(out);
    for (int r = 0; r < va.rows; ++r) {
        std::copy(&va(r, 0), &va(r, 0) + va.cols, &vo(r, 0));
        std::copy(&vb(r, 0), &vb(r, 0) + vb.cols, &vo(r, va.cols));
    }
    if (g.node(out.id).needs_grad)
        g.set_back(out, [a, b](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            const int ca = gr.val(a).cols, cb = gr.val(b).cols;
            if (gr.node(a.id).needs_grad) {
                auto& ga = gr.grad_buf(a.id);
                for (int r = 0; r < d.rows; ++r)
                    for (int c = 0; c < ca; ++c) ga(r, c) += d(r, c);
            }
            if (gr.node(b.id).needs_grad) {
                auto& gb = gr.grad_buf(b.id);
                for (int r = 0; r < d.rows; ++r)
                    for (int c = 0; c < cb; ++c) gb(r, c) += d(r, ca + c);
            }
        });
    return out;
}

template <typename S>
Ref slice_cols(GraphT<S>& g, Ref x, int c0, int n) {
    const auto& vx = g.val(x);
    Ref out = g.make(vx.rows, n, g.node(x.id).needs_grad);
    auto& vo = g.val(out);
    for (int r = 0; r < vx.rows; ++r)
        std::copy(&vx(r, c0), &vx(r, c0) + n, &vo(r, 0));
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, c0, n](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            auto& gx = gr.grad_buf(x.id);
            for (int r = 0; r < d.rows; ++r)
                for (int c = 0; c < n; ++c) gx(r, c0 + c) += d(r, c);
        });
    return out;
}

template <typename S>
Ref slice_rows(GraphT<S>& g, Ref x, int r0, int n) {
    const auto& vx = g.val(x);
    Ref out = g.make(n, vx.cols, g.node(x.id).needs_grad);
    auto& vo = g.val(out);
    std::copy(&vx(r0, 0), &vx(r0, 0) + std::size_t(n) * vx.cols, vo.data());
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, r0, n](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            auto& gx = gr.grad_buf(x.id);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < d.cols; ++c) gx(r0 + r, c) += d(r, c);
        });
    return out;
}

/// Row-wise hard selection: out.row(i) = cond[i] ? a.row(i) : b.row(i).
/// The gradient is routed to whichever candidate was chosen, never blended.
template <typename S>
Ref where_rows(GraphT<S>& g, std::vector<std::uint8_t> cond, Ref a, Ref b) {
    const auto& va = g.val(a);
    Ref out = g.make(va.rows, va.cols, detail::wants_grad(g, {a, b}));
    auto& vo = g.val(out);
    const auto& vb = g.val(b);
    for (int r = 0; r < va.rows; ++r) {
        const auto& src = cond[r] ? va : vb;
        std::copy(&src(r, 0), &src(r, 0) + va.cols, &vo(r, 0));
    }
    if (g.node(out.id).needs_grad)
        g.set_back(out, [a, b, cond = std::move(cond)](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            for (int r = 0; r < d.rows; ++r) {
                Ref tgt = cond[r] ? a : b;
                if (!gr.node(tgt.id).needs_grad) continue;
                auto& gt = gr.grad_buf(tgt.id);
                for (int c = 0; c < d.cols; ++c) gt(r, c) += d(r, c);
            }
        });
    return out;
}

/// Broadcasts a [1, C] row to [n, C] (backward sums over rows).
template <typename S>
Ref tile_rows(GraphT<S>& g, Ref x, int n) {
    const auto& vx = g.val(x);
    Ref out = g.make(n, vx.cols, g.node(x.id).needs_grad);
    auto& vo = g.val(out);
    for (int r = 0; r < n; ++r) std::copy(vx.data(), vx.data() + vx.cols, &vo(r, 0));
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            auto& gx = gr.grad_buf(x.id);
            for (int r = 0; r < d.rows; ++r)
                for (int c = 0; c < d.cols; ++c) gx(0, c) += d(r, c);
        });
    return out;
}

/// Multiplies every row of `x` by the matching scalar in column vector `s`.
template <typename S>
Ref mul_rows(GraphT<S>& g, Ref x, Ref s) {
    const auto& vx = g.val(x);
    Ref out = g.make(vx.rows, vx.cols, detail::wants_grad(g, {x, s}));
    auto& vo = g.val(out);
    const auto& vs = g.val(s);
    for (int r = 0; r < vx.rows; ++r)
        for (int c = 0; c < vx.cols; ++c) vo(r, c) = vx(r, c) * vs(r, 0);
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, s](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            const auto& vx2 = gr.val(x);
            const auto& vs2 = gr.val(s);
            if (gr.node(x.id).needs_grad) {
                auto& gx = gr.grad_buf(x.id);
                for (int r = 0; r < d.rows; ++r)
                    for (int c = 0; c < d.cols; ++c) gx(r, c) += d(r, c) * vs2(r, 0);
            }
            if (gr.node(s.id).needs_grad) {
                auto& gs = gr.grad_buf(s.id);
                for (int r = 0; r < d.rows; ++r) {
                    S acc = S(0);
                    for (int c = 0; c < d.cols; ++c) acc += d(r, c) * vx2(r, c);
                    gs(r, 0) += acc;
                }
            }
        });
    return out;
}

/// y = x * W^T + b with W:[out,in], b:[1,out].
template <typename S>
Ref affine(GraphT<S>& g, Ref x, Ref W, Ref b) {
    const auto& vx = g.val(x);
    const auto& vw = g.val(W);
    Ref out = g.make(vx.rows, vw.rows, detail::wants_grad(g, {x, W, b}));
    auto& vo = g.val(out);
    as_mat(vo).noalias() = as_mat(vx) * as_mat(vw).transpose();
    as_mat(vo).rowwise() += as_mat(g.val(b)).row(0);
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x, W, b](GraphT<S>& gr, int id) {
            const auto& d = gr.node(id).grad;
            if (gr.node(x.id).needs_grad)
                as_mat(gr.grad_buf(x.id)).noalias() += as_mat(d) * as_mat(gr.val(W));
            if (gr.node(W.id).needs_grad)
                as_mat(gr.grad_buf(W.id)).noalias() +=
                    as_mat(d).transpose() * as_mat(gr.val(x));
            if (gr.node(b.id).needs_grad)
                as_mat(gr.grad_buf(b.id)).row(0) += as_mat(d).colwise().sum();
        });
    return out;
}

template <typename S>
Ref sum_all(GraphT<S>& g, Ref x) {
    Ref out = g.make(1, 1, g.node(x.id).needs_grad);
    g.val(out).v[0] = as_mat(g.val(x)).sum();
    if (g.node(out.id).needs_grad)
        g.set_back(out, [x](GraphT<S>& gr, int id) {
            const S d = gr.node(id).grad.v[0];
            as_mat(gr.grad_buf(x.id)).array() += d;
        });
    return out;
}

/// Sums a list of same-shape nodes.
template <typename S>
Ref add_n(GraphT<S>& g, const std::vector<Ref>& xs) {
    Ref acc = xs.front();
    for (std::size_t i = 1; i < xs.size(); ++i) acc = add(g, acc, xs[i]);
    return acc;
}

// --- losses ------------------------------------------------------------------

/// Masked Bernoulli cross-entropy, summed over all elements:
///   -sum_i mask_i * (t_i log p_i + (1-t_i) log(1-p_i)),  p clamped away from {0,1}.
template <typename S>
Ref bce_sum(GraphT<S>& g, Ref pred, const TensorT<S>& target, const TensorT<S>* mask = nullptr) {
    const auto& vp = g.val(pred);
    Ref out = g.make(1, 1, g.node(pred.id).needs_grad);
    const S eps = S(1e-6);
    double acc = 0;
    for (std::size_t i = 0; i < vp.v.size(); ++i) {
        const double m = mask ? double(mask->v[i]) : 1.0;
        if (m == 0.0) continue;
        const double p = std::min(std::max(double(vp.v[i]), double(eps)), 1.0 - double(eps));
        const double t = double(target.v[i]);
        acc -= m * (t * std::log(p) + (1.0 - t) * std::log1p(-p));
    }
    g.val(out).v[0] = S(acc);
    if (g.node(out.id).needs_grad) {
        const TensorT<S>* mp = mask;
        TensorT<S> tcopy = target;
        TensorT<S> mcopy = mask ? *mask : TensorT<S>();
        g.set_back(out, [pred, tcopy = std::move(tcopy), mcopy = std::move(mcopy),
                         has_mask = (mp != nullptr), eps](GraphT<S>& gr, int id) {
            const S d = gr.node(id).grad.v[0];
            auto& gp = gr.grad_buf(pred.id);
            const auto& vp2 = gr.val(pred);
            for (std::size_t i = 0; i < gp.v.size(); ++i) {
                const S m = has_mask ? mcopy.v[i] : S(1);
                if (m == S(0)) continue;
                S p = vp2.v[i];
                p = std::min(std::max(p, eps), S(1) - eps);
                gp.v[i] += d * m * ((p - tcopy.v[i]) / (p * (S(1) - p)));
            }
        });
    }
    return out;
}

/// Masked squared error, summed: sum_i mask_i * (p_i - t_i)^2.
template <typename S>
Ref mse_sum(GraphT<S>& g, Ref pred, const TensorT<S>& target, const TensorT<S>* mask = nullptr) {
    const auto& vp = g.val(pred);
    Ref out = g.make(1, 1, g.node(pred.id).needs_grad);
    double acc = 0;
    for (std::size_t i = 0; i < vp.v.size(); ++i) {
        const double m = mask ? double(mask->v[i]) : 1.0;
        const double e = double(vp.v[i]) - double(target.v[i]);
        acc += m * e * e;
    }
    g.val(out).v[0] = S(acc);
    if (g.node(out.id).needs_grad) {
        TensorT<S> tcopy = target;
        TensorT<S> mcopy = mask ? *mask : TensorT<S>();
        g.set_back(out, [pred, tcopy = std::move(tcopy), mcopy = std::move(mcopy),
                         has_mask = (mask != nullptr)](GraphT<S>& gr, int id) {
            const S d = gr.node(id).grad.v[0];
            auto& gp = gr.grad_buf(pred.id);
            const auto& vp2 = gr.val(pred);
            for (std::size_t i = 0; i < gp.v.size(); ++i) {
                const S m = has_mask ? mcopy.v[i] : S(1);
                gp.v[i] += d * m * S(2) * (vp2.v[i] - tcopy.v[i]);
            }
        });
    }
    return out;
}

/// Closed-form KL( N(mu, exp(logvar)) || N(0, 1) ), summed over elements:
///   0.5 * sum (mu^2 + exp(lv) - 1 - lv).   Always >= 0.
template <typename S>
Ref gauss_kl_sum(GraphT<S>& g, Ref mu, Ref logvar) {
    const auto& vm = g.val(mu);
    const auto& vl = g.val(logvar);
    Ref out = g.make(1, 1, detail::wants_grad(g, {mu, logvar}));
    double acc = 0;
    for (std::size_t i = 0; i < vm.v.size(); ++i) {
        const double m = double(vm.v[i]), l = double(vl.v[i]);
        acc += 0.5 * (m * m + std::exp(l) - 1.0 - l);
    }
    g.val(out).v[0] = S(acc);
    if (g.node(out.id).needs_grad)
        g.set_back(out, [mu, logvar](GraphT<S>& gr, int id) {
            const S d = gr.node(id).grad.v[0];
            const auto& vm2 = gr.val(mu);
            const auto& vl2 = gr.val(logvar);
            if (gr.node(mu.id).needs_grad) {
                auto& gm = gr.grad_buf(mu.id);
                for (std::size_t i = 0; i < gm.v.size(); ++i) gm.v[i] += d * vm2.v[i];
            }
            if (gr.node(logvar.id).needs_grad) {
                auto& gl = gr.grad_buf(logvar.id);
                for (std::size_t i = 0; i < gl.v.size(); ++i)
                    gl.v[i] += d * S(0.5) * (S(std::exp(double(vl2.v[i]))) - S(1));
            }
        });
    return out;
}

using Graph = GraphT<float>;

}  // namespace dive
