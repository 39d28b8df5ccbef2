#include <doctest.h>

#include "dive/eval/metrics.hpp"
#include "dive/core/rng.hpp"

using namespace dive;

namespace {

// Brute-force oracles, deliberately written as plain per-pixel /
// per-window double loops, independent of the library implementations.

double oracle_bce(const std::vector<float>& p, const std::vector<float>& t) {
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double pi = std::min(std::max(double(p[i]), 1e-6), 1.0 - 1e-6);
        acc += -(double(t[i]) * std::log(pi) + (1.0 - double(t[i])) * std::log(1.0 - pi));
    }
    return acc;
}

double oracle_mse(const std::vector<float>& p, const std::vector<float>& t) {
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = double(p[i]) - double(t[i]);
        acc += e * e;
    }
    return acc;
}

/// Direct-window SSIM: for every valid 11x11 window, accumulate the
/// Gaussian-weighted moments with explicit nested loops.
double oracle_ssim(const std::vector<float>& a, const std::vector<float>& b, int w, int h,
                   int row0, int row1) {
    const int win = 11, r = win / 2;
    const double sigma = 1.5, C1 = 1e-4, C2 = 9e-4;
    double kernel[11][11];
    double ksum = 0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            const double dy = i - 5.0, dx = j - 5.0;
            kernel[i][j] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            ksum += kernel[i][j];
        }
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) kernel[i][j] /= ksum;

    double acc = 0;
    long count = 0;
    for (int cy = std::max(row0 + r, r); cy < std::min(row1 - r, h - r); ++cy)
        for (int cx = r; cx < w - r; ++cx) {
            double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double va = a[(cy - r + i) * w + (cx - r + j)];
                    const double vb = b[(cy - r + i) * w + (cx - r + j)];
                    ma += kernel[i][j] * va;
                    mb += kernel[i][j] * vb;
                    maa += kernel[i][j] * va * va;
                    mbb += kernel[i][j] * vb * vb;
                    mab += kernel[i][j] * va * vb;
                }
            const double vara = maa - ma * ma, varb = mbb - mb * mb, cov = mab - ma * mb;
            acc += ((2 * ma * mb + C1) * (2 * cov + C2)) /
                   ((ma * ma + mb * mb + C1) * (vara + varb + C2));
            ++count;
        }
    return acc / count;
}

std::vector<float> random_image(int n, Rng& rng, bool binary = false) {
    std::vector<float> img(n);
    for (auto& v : img) v = binary ? float(rng.bernoulli(0.3)) : float(rng.uniform());
    return img;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("BCE and MSE match per-pixel double-loop oracles on 200 random images") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const int side = 8;
        auto p = random_image(side * side, rng);
        auto t = random_image(side * side, rng, trial % 2 == 0);
        const auto band = metrics::RowBand::full(side);
        CHECK(std::abs(metrics::bce_frame(p.data(), t.data(), side, band) - oracle_bce(p, t)) <
              1e-6);
        CHECK(std::abs(metrics::mse_frame(p.data(), t.data(), side, band) - oracle_mse(p, t)) <
              1e-6);
    }
}

TEST_CASE("constant 0.5 prediction against a binary 64x64 frame: 4096 ln 2") {
    Rng rng(7);
    std::vector<float> pred(64 * 64, 0.5f);
    auto target = random_image(64 * 64, rng, true);
    const double got = metrics::bce_frame(pred.data(), target.data(), 64,
                                          metrics::RowBand::full(64));
    CHECK(got == doctest::Approx(4096 * std::log(2.0)).epsilon(1e-9));
    CHECK(got == doctest::Approx(2839.1308).epsilon(1e-6));
}

TEST_CASE("SSIM matches the naive direct-window oracle within 1e-6") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const int side = 32;
        auto a = random_image(side * side, rng);
        auto b = a;
        // correlated but not identical images exercise the full formula
        for (auto& v : b) v = std::min(1.f, std::max(0.f, v + float(rng.uniform(-0.2, 0.2))));
        const double lib =
            metrics::ssim_frame(a.data(), b.data(), side, side, metrics::RowBand::full(side));
        const double orc = oracle_ssim(a, b, side, side, 0, side);
        CHECK(std::abs(lib - orc) < 1e-6);
    }
}

TEST_CASE("SSIM restricted to the visible band matches the banded oracle") {
    Rng rng(34);
    const int side = 64;
    auto a = random_image(side * side, rng);
    auto b = random_image(side * side, rng);
    const metrics::RowBand band{32, 64};
    const double lib = metrics::ssim_frame(a.data(), b.data(), side, side, band);
    const double orc = oracle_ssim(a, b, side, side, 32, 64);
    CHECK(std::abs(lib - orc) < 1e-6);
}

TEST_CASE("identical frames: MSE 0, SSIM 1, PSNR capped at 100") {
    Rng rng(35);
    auto img = random_image(64 * 64, rng);
    const auto band = metrics::RowBand::full(64);
    CHECK(metrics::mse_frame(img.data(), img.data(), 64, band) == 0.0);
    CHECK(metrics::ssim_frame(img.data(), img.data(), 64, 64, band) == doctest::Approx(1.0));
    CHECK(metrics::psnr_frame(img.data(), img.data(), 64, band) == 100.0);
}

TEST_CASE("PSNR uses dynamic range 1 on the per-pixel mean") {
    std::vector<float> a(64 * 64, 0.f), b(64 * 64, 0.1f);
    // mse mean = 0.01 -> psnr = 20 dB
    CHECK(metrics::psnr_frame(a.data(), b.data(), 64, metrics::RowBand::full(64)) ==
          doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("visible-band reduction only counts rows in the band") {
    const int side = 64;
    std::vector<float> pred(side * side, 0.f), target(side * side, 0.f);
    // corrupt only the occluded band; banded metrics must ignore it
    for (int p = 0; p < 32 * side; ++p) target[p] = 1.f;
    const metrics::RowBand band{32, 64};
    CHECK(metrics::mse_frame(pred.data(), target.data(), side, band) == 0.0);
    // only the eps clamp contributes: 2048 * -log1p(-1e-6) ~ 2e-3
    CHECK(metrics::bce_frame(pred.data(), target.data(), side, band) < 5e-3);
}

TEST_SUITE_END();
