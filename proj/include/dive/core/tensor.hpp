// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dive {

/// Dense row-major 2-D tensor. Rows are almost always the batch dimension;
/// images travel flattened (channel-major) in the column dimension.
template <typename S>
struct TensorT {
    int rows = 0;
    int cols = 0;
    std::vector<S> v;

    TensorT() = default;
    TensorT(int r, int c) : rows(r), cols(c), v(std::size_t(r) * c, S(0)) {}
    TensorT(int r, int c, std::vector<S> data) : rows(r), cols(c), v(std::move(data)) {
        assert(v.size() == std::size_t(r) * c);
    }

    std::size_t size() const { return v.size(); }
    S* data() { return v.data(); }
    const S* data() const { return v.data(); }
    S& operator()(int r, int c) { return v[std::size_t(r) * cols + c]; }
    const S& operator()(int r, int c) const { return v[std::size_t(r) * cols + c]; }

    void fill(S x) { std::fill(v.begin(), v.end(), x); }
    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.assign(std::size_t(r) * c, S(0));
    }

    bool all_finite() const {
        for (S x : v)
            if (!std::isfinite(double(x))) return false;
        return true;
    }
};

template <typename S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
Eigen::Map<EMat<S>> as_mat(TensorT<S>& t) {
    return Eigen::Map<EMat<S>>(t.data(), t.rows, t.cols);
}

template <typename S>
Eigen::Map<const EMat<S>> as_mat(const TensorT<S>& t) {
    return Eigen::Map<const EMat<S>>(t.data(), t.rows, t.cols);
}

using Tensor = TensorT<float>;

}  // namespace dive
