// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal 8-bit grayscale PNG writer (zlib for the IDAT stream) plus a
// tiny 5x7 glyph bank for row labels in rendered figure grids.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

namespace dive {

/// Row-major 8-bit grayscale canvas.
struct GrayCanvas {
    int w = 0, h = 0;
    std::vector<std::uint8_t> px;

    GrayCanvas(int width, int height, std::uint8_t fill = 0)
        : w(width), h(height), px(std::size_t(width) * height, fill) {}

    void set(int x, int y, std::uint8_t v) {
        if (x >= 0 && x < w && y >= 0 && y < h) px[std::size_t(y) * w + x] = v;
    }

    /// Blits a [0,1] float image scaled to u8.
    void blit(const float* img, int iw, int ih, int x0, int y0) {
        for (int y = 0; y < ih; ++y)
            for (int x = 0; x < iw; ++x) {
                float v = img[y * iw + x];
                v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
                set(x0 + x, y0 + y, std::uint8_t(v * 255.f + 0.5f));
            }
    }
};

namespace pngdetail {

inline void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(std::uint8_t(x >> 24));
    v.push_back(std::uint8_t(x >> 16));
    v.push_back(std::uint8_t(x >> 8));
    v.push_back(std::uint8_t(x));
}

inline std::uint32_t crc32_of(const std::uint8_t* p, std::size_t n) {
    return std::uint32_t(::crc32(0L, p, uInt(n)));
}

inline void chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    put_u32(out, std::uint32_t(data.size()));
    std::vector<std::uint8_t> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    out.insert(out.end(), body.begin(), body.end());
    put_u32(out, crc32_of(body.data(), body.size()));
}

}  // namespace pngdetail

inline void write_png(const std::string& path, const GrayCanvas& c) {
    // filter byte 0 per scanline
    std::vector<std::uint8_t> raw;
    raw.reserve(std::size_t(c.h) * (c.w + 1));
    for (int y = 0; y < c.h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), c.px.begin() + std::size_t(y) * c.w,
                   c.px.begin() + std::size_t(y + 1) * c.w);
    }
    uLongf zcap = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> z(zcap);
    if (compress2(z.data(), &zcap, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    z.resize(zcap);

    std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<std::uint8_t> ihdr;
    pngdetail::put_u32(ihdr, std::uint32_t(c.w));
    pngdetail::put_u32(ihdr, std::uint32_t(c.h));
    ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit gray
    pngdetail::chunk(out, "IHDR", ihdr);
    pngdetail::chunk(out, "IDAT", z);
    pngdetail::chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("png: cannot open " + path);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
}

/// 5x7 bitmap font covering the characters used by figure labels.
inline const std::uint8_t* font5x7(char ch) {
    // each glyph: 7 rows, low 5 bits used
    static const struct {
        char c;
        std::uint8_t rows[7];
    } glyphs[] = {
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
        {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
        {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
        {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
        {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
        {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
        {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
        {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
        {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
        {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
        {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
        {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {' ', {0, 0, 0, 0, 0, 0, 0}},
    };
    for (const auto& g : glyphs)
        if (g.c == ch) return g.rows;
    return glyphs[sizeof(glyphs) / sizeof(glyphs[0]) - 1].rows;  // blank
}

inline void draw_label(GrayCanvas& c, const std::string& text, int x0, int y0,
                       std::uint8_t val = 255) {
    int x = x0;
    for (char ch : text) {
        const std::uint8_t* rows = font5x7(std::toupper(ch));
        for (int r = 0; r < 7; ++r)
            for (int b = 0; b < 5; ++b)
                if (rows[r] & (1 << (4 - b))) c.set(x + b, y0 + r, val);
        x += 6;
    }
}

}  // namespace dive
