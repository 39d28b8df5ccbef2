// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Digit glyph sources for the synthetic video generator. Two providers:
//   - MNIST IDX files (with an HTTP downloader + sha256 verification)
//   - a built-in procedural atlas (stroke-rendered digits with per-variant
//     jitter) so every pipeline stage runs without external data.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "dive/core/rng.hpp"
#include "dive/util/sha256.hpp"

namespace dive {

constexpr int kGlyphSize = 28;

struct Glyph {
    std::vector<float> pixels;  // 28*28, values in [0,1]
    int label = 0;
};

/// A finite, indexable set of digit glyphs.
class GlyphSet {
public:
    explicit GlyphSet(std::vector<Glyph> glyphs) : glyphs_(std::move(glyphs)) {
        if (glyphs_.empty()) throw std::runtime_error("glyph set is empty");
        for (const auto& g : glyphs_) {
            if (g.pixels.size() != std::size_t(kGlyphSize * kGlyphSize))
                throw std::runtime_error("glyph is not 28x28");
            for (float v : g.pixels)
                if (v < 0.f || v > 1.f) throw std::runtime_error("glyph pixel outside [0,1]");
        }
    }

    int count() const { return int(glyphs_.size()); }
    const Glyph& at(int i) const { return glyphs_[std::size_t(i)]; }

private:
    std::vector<Glyph> glyphs_;
};

// --- built-in procedural digits ----------------------------------------------

namespace glyphs_detail {

struct P {
    double x, y;
};

inline void add_arc(std::vector<std::vector<P>>& strokes, double cx, double cy, double rx,
                    double ry, double a0_deg, double a1_deg, int n = 24) {
    std::vector<P> pts;
    for (int i = 0; i <= n; ++i) {
        const double a = (a0_deg + (a1_deg - a0_deg) * i / n) * 3.14159265358979 / 180.0;
        pts.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    strokes.push_back(std::move(pts));
}

/// Stroke skeletons in a unit box, y pointing down.
inline std::vector<std::vector<P>> digit_strokes(int d) {
    std::vector<std::vector<P>> s;
    switch (d) {
        case 0:
            add_arc(s, 0.50, 0.50, 0.27, 0.38, 0, 360, 40);
            break;
        case 1:
            s.push_back({{0.34, 0.26}, {0.53, 0.10}, {0.53, 0.90}});
            break;
        case 2:
            add_arc(s, 0.50, 0.31, 0.23, 0.21, 185, 355);
            s.push_back({{0.72, 0.34}, {0.27, 0.86}, {0.76, 0.86}});
            break;
        case 3:
            add_arc(s, 0.47, 0.30, 0.21, 0.20, 200, 420);
            add_arc(s, 0.47, 0.67, 0.24, 0.22, -60, 170);
            break;
        case 4:
            s.push_back({{0.58, 0.10}, {0.22, 0.58}, {0.80, 0.58}});
            s.push_back({{0.62, 0.34}, {0.62, 0.90}});
            break;
        case 5:
            s.push_back({{0.72, 0.12}, {0.32, 0.12}, {0.30, 0.44}});
            add_arc(s, 0.46, 0.64, 0.25, 0.24, 250, 480);
            break;
        case 6:
            s.push_back({{0.64, 0.10}, {0.45, 0.38}, {0.34, 0.60}});
            add_arc(s, 0.48, 0.67, 0.22, 0.21, 0, 360, 32);
            break;
        case 7:
            s.push_back({{0.25, 0.12}, {0.75, 0.12}, {0.42, 0.90}});
            break;
        case 8:
            add_arc(s, 0.50, 0.30, 0.19, 0.18, 0, 360, 32);
            add_arc(s, 0.50, 0.68, 0.23, 0.21, 0, 360, 32);
            break;
        case 9:
            add_arc(s, 0.47, 0.33, 0.21, 0.20, 0, 360, 32);
            s.push_back({{0.68, 0.36}, {0.60, 0.90}});
            break;
        default:
            throw std::runtime_error("digit out of range");
    }
    return s;
}

inline double seg_dist(double px, double py, const P& a, const P& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace glyphs_detail

/// Renders one jittered instance of a digit. Deterministic in
/// (digit, variant, salt).
inline Glyph render_builtin_glyph(int digit, std::uint64_t variant, std::uint64_t salt = 0) {
    using namespace glyphs_detail;
    Rng rng(mix_seed({0xD1617ULL, std::uint64_t(digit), variant, salt}));
    auto strokes = digit_strokes(digit);

    // per-variant jitter: rotation, anisotropic scale, shear, offset
    const double rot = rng.uniform(-0.13, 0.13);
    const double sx = rng.uniform(0.88, 1.08), sy = rng.uniform(0.88, 1.08);
    const double shear = rng.uniform(-0.10, 0.10);
    const double ox = rng.uniform(-0.045, 0.045), oy = rng.uniform(-0.035, 0.035);
    const double thick = rng.uniform(1.25, 1.85);
    const double cr = std::cos(rot), sr = std::sin(rot);
    for (auto& stroke : strokes)
        for (auto& p : stroke) {
            double x = (p.x - 0.5) * sx, y = (p.y - 0.5) * sy;
            x += shear * y;
            const double xr = cr * x - sr * y, yr = sr * x + cr * y;
            p.x = 0.5 + xr + ox;
            p.y = 0.5 + yr + oy;
        }

    Glyph g;
    g.label = digit;
    g.pixels.assign(kGlyphSize * kGlyphSize, 0.f);
    const double span = 22.0;  // unit box occupies ~22px, leaving a margin
    for (int iy = 0; iy < kGlyphSize; ++iy)
        for (int ix = 0; ix < kGlyphSize; ++ix) {
            const double ux = (ix - (kGlyphSize - 1) * 0.5) / span + 0.5;
            const double uy = (iy - (kGlyphSize - 1) * 0.5) / span + 0.5;
            double d = 1e9;
            for (const auto& stroke : strokes)
                for (std::size_t k = 0; k + 1 < stroke.size(); ++k)
                    d = std::min(d, seg_dist(ux, uy, stroke[k], stroke[k + 1]));
            const double dpx = d * span;
            double v = (thick * 0.5 + 0.6 - dpx) / 1.0;
            v = std::min(1.0, std::max(0.0, v));
            g.pixels[iy * kGlyphSize + ix] = float(v);
        }
    return g;
}

/// Built-in atlas. Split "train" and "test" use disjoint variant ranges.
inline GlyphSet builtin_glyphs(const std::string& split, int variants_per_digit = 64) {
    const std::uint64_t salt = (split == "test") ? 0x7e57ULL : 0x7121aULL;
    std::vector<Glyph> out;
    out.reserve(std::size_t(10) * variants_per_digit);
    for (int d = 0; d < 10; ++d)
        for (int v = 0; v < variants_per_digit; ++v)
            out.push_back(render_builtin_glyph(d, std::uint64_t(v), salt));
    return GlyphSet(std::move(out));
}

// --- MNIST IDX ingestion ------------------------------------------------------

namespace idx {

inline std::uint32_t read_be32(std::istream& f) {
    std::uint8_t b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline std::vector<std::vector<float>> load_images(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    if (read_be32(f) != 0x803) throw std::runtime_error(path + ": bad IDX image magic");
    const std::uint32_t n = read_be32(f), h = read_be32(f), w = read_be32(f);
    if (h != 28 || w != 28) throw std::runtime_error(path + ": expected 28x28 images");
    std::vector<std::vector<float>> out(n);
    std::vector<std::uint8_t> row(h * w);
    for (auto& img : out) {
        f.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        if (!f) throw std::runtime_error(path + ": truncated");
        img.resize(h * w);
        for (std::size_t i = 0; i < row.size(); ++i) img[i] = float(row[i]) / 255.f;
    }
    return out;
}

inline std::vector<int> load_labels(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    if (read_be32(f) != 0x801) throw std::runtime_error(path + ": bad IDX label magic");
    const std::uint32_t n = read_be32(f);
    std::vector<std::uint8_t> raw(n);
    f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(n));
    if (!f) throw std::runtime_error(path + ": truncated");
    return std::vector<int>(raw.begin(), raw.end());
}

}  // namespace idx

inline GlyphSet mnist_glyphs(const std::string& images_path, const std::string& labels_path) {
    auto images = idx::load_images(images_path);
    auto labels = idx::load_labels(labels_path);
    if (images.size() != labels.size())
        throw std::runtime_error("mnist: image/label count mismatch");
    std::vector<Glyph> out(images.size());
    for (std::size_t i = 0; i < images.size(); ++i)
        out[i] = Glyph{std::move(images[i]), labels[i]};
    return GlyphSet(std::move(out));
}

// --- download + checksum ------------------------------------------------------

struct RemoteFile {
    std::string url_path;       // path component on the host
    std::string filename;       // local name (decompressed if gz)
    std::string sha256;         // of the *downloaded* payload
    bool gzipped = false;
};

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw std::runtime_error("gunzip: init failed");
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> buf(1 << 16);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = uInt(in.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf.data();
        zs.avail_out = uInt(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("gunzip: corrupt stream");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    }
    inflateEnd(&zs);
    return out;
}

/// Fetches `file` from an HTTP host, verifies its sha256, optionally
/// decompresses and writes it under `dir` (atomically). Declared here,
/// defined in net_fetch.hpp to keep httplib out of most translation units.
bool fetch_verified(const std::string& host, int port, const RemoteFile& file,
                    const std::filesystem::path& dir, std::string* error);

}  // namespace dive
