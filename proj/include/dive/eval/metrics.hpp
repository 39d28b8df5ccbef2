// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Image quality metrics, double precision. "Per frame" means summed over
// pixels within a frame, then averaged over frames and sequences - the
// only reduction consistent with the reported magnitudes. PSNR uses the
// per-pixel mean with dynamic range 1.0, capped at 100 dB. SSIM uses an
// 11-tap Gaussian window (sigma 1.5, K1=0.01, K2=0.03, L=1), restricted
// to windows fully inside the visible row band, computed via separable
// filtering (tests hold the naive direct-window oracle).

#pragma once

#include <cmath>
#include <vector>

namespace dive::metrics {

constexpr double kBceEps = 1e-6;
constexpr double kPsnrCap = 100.0;

/// Visible-row band of a frame; scenario 1 evaluates rows [32, H).
struct RowBand {
    int row0 = 0, row1 = 0;  // [row0, row1)
    static RowBand full(int h) { return {0, h}; }
};

inline double bce_frame(const float* pred, const float* target, int w, const RowBand& rows) {
    double acc = 0;
    for (int y = rows.row0; y < rows.row1; ++y)
        for (int x = 0; x < w; ++x) {
            double p = double(pred[y * w + x]);
            p = std::min(std::max(p, kBceEps), 1.0 - kBceEps);
            const double t = double(target[y * w + x]);
            acc -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
        }
    return acc;
}

inline double mse_frame(const float* pred, const float* target, int w, const RowBand& rows) {
    double acc = 0;
    for (int y = rows.row0; y < rows.row1; ++y)
        for (int x = 0; x < w; ++x) {
            const double e = double(pred[y * w + x]) - double(target[y * w + x]);
            acc += e * e;
        }
    return acc;
}

inline double psnr_frame(const float* pred, const float* target, int w, const RowBand& rows) {
    const double n = double(rows.row1 - rows.row0) * w;
    const double mse = mse_frame(pred, target, w, rows) / n;
    if (mse < 1e-10) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace ssim_detail {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2
constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2

inline const std::vector<double>& gauss_taps() {
    static const std::vector<double> taps = [] {
        std::vector<double> t(kWindow);
        double sum = 0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - (kWindow - 1) / 2.0;
            t[i] = std::exp(-0.5 * d * d / (kSigma * kSigma));
            sum += t[i];
        }
        for (auto& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// separable Gaussian over valid columns/rows only (no padding needed:
// callers only read positions where the window is fully inside)
inline void blur_valid(const std::vector<double>& in, int w, int h, std::vector<double>& tmp,
                       std::vector<double>& out) {
    const auto& k = gauss_taps();
    const int r = kWindow / 2;
    tmp.assign(in.size(), 0.0);
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = r; x < w - r; ++x) {
            double acc = 0;
            for (int i = 0; i < kWindow; ++i) acc += k[i] * in[y * w + x - r + i];
            tmp[y * w + x] = acc;
        }
    for (int y = r; y < h - r; ++y)
        for (int x = r; x < w - r; ++x) {
            double acc = 0;
            for (int i = 0; i < kWindow; ++i) acc += k[i] * tmp[(y - r + i) * w + x];
            out[y * w + x] = acc;
        }
}

}  // namespace ssim_detail

/// Mean SSIM over all 11x11 windows fully inside the visible band.
inline double ssim_frame(const float* a, const float* b, int w, int h, const RowBand& rows) {
    using namespace ssim_detail;
    const int r = kWindow / 2;
    std::vector<double> xa(w * h), xb(w * h), xaa(w * h), xbb(w * h), xab(w * h);
    for (int i = 0; i < w * h; ++i) {
        xa[i] = a[i];
        xb[i] = b[i];
        xaa[i] = xa[i] * xa[i];
        xbb[i] = xb[i] * xb[i];
        xab[i] = xa[i] * xb[i];
    }
    std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
    blur_valid(xa, w, h, tmp, mu_a);
    blur_valid(xb, w, h, tmp, mu_b);
    blur_valid(xaa, w, h, tmp, m_aa);
    blur_valid(xbb, w, h, tmp, m_bb);
    blur_valid(xab, w, h, tmp, m_ab);

    double acc = 0;
    long count = 0;
    const int y0 = std::max(rows.row0 + r, r), y1 = std::min(rows.row1 - r, h - r);
    for (int y = y0; y < y1; ++y)
        for (int x = r; x < w - r; ++x) {
            const int i = y * w + x;
            const double va = m_aa[i] - mu_a[i] * mu_a[i];
            const double vb = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2 * mu_a[i] * mu_b[i] + kC1) * (2 * cov + kC2);
            const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2);
            acc += num / den;
            ++count;
        }
    return count > 0 ? acc / count : 1.0;
}

/// Streaming per-frame accumulator ("sum over pixels, mean over frames").
struct FrameAverager {
    double sum = 0;
    long frames = 0;
    void add(double frame_value) {
        sum += frame_value;
        ++frames;
    }
    double mean() const { return frames > 0 ? sum / frames : 0.0; }
};

}  // namespace dive::metrics
