// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// DIVE1 dataset container. Little-endian, fixed layout:
//   magic "DIVE1" | u8 version | u8 scenario | u8 glyph_source | u8 reserved
//   u32 count, N, T, H, W | u64 base_seed
// then per sample:
//   u64 sample_seed | u8 corrupted[T*H*W] | u8 complete[T*H*W] | u8 mask[N*T]
// Frames are stored as round(v * 255).

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dive/data/scenario.hpp"

namespace dive {

enum class GlyphSource : std::uint8_t { builtin = 0, mnist = 1 };

inline GlyphSource glyph_source_from_string(const std::string& s) {
    if (s == "builtin") return GlyphSource::builtin;
    if (s == "mnist") return GlyphSource::mnist;
    throw std::invalid_argument("glyph source must be 'builtin' or 'mnist'");
}

inline const char* to_string(GlyphSource s) {
    return s == GlyphSource::builtin ? "builtin" : "mnist";
}

struct ContainerHeader {
    std::uint8_t version = 1;
    Scenario scenario = Scenario::none;
    GlyphSource glyph_source = GlyphSource::builtin;
    std::uint32_t count = 0, num_objects = 0, seq_len = 0, height = 64, width = 64;
    std::uint64_t base_seed = 0;

    std::size_t frames_bytes() const { return std::size_t(seq_len) * height * width; }
    std::size_t sample_bytes() const {
        return 8 + 2 * frames_bytes() + std::size_t(num_objects) * seq_len;
    }
};

namespace container_detail {

constexpr char kMagic[5] = {'D', 'I', 'V', 'E', '1'};
constexpr std::size_t kHeaderBytes = 5 + 4 + 5 * 4 + 8;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= T(p[i]) << (8 * i);
    return v;
}

inline std::uint8_t quantize(float v) {
    v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    return std::uint8_t(v * 255.f + 0.5f);
}

}  // namespace container_detail

class ContainerWriter {
public:
    ContainerWriter(const std::string& path, ContainerHeader header)
        : path_(path), tmp_(path + ".tmp"), header_(header), f_(tmp_, std::ios::binary) {
        if (!f_) throw std::runtime_error("cannot open " + tmp_);
        using namespace container_detail;
        std::vector<std::uint8_t> h(kMagic, kMagic + 5);
        h.push_back(header.version);
        h.push_back(std::uint8_t(header.scenario));
        h.push_back(std::uint8_t(header.glyph_source));
        h.push_back(0);
        put_le(h, header.count);
        put_le(h, header.num_objects);
        put_le(h, header.seq_len);
        put_le(h, header.height);
        put_le(h, header.width);
        put_le(h, header.base_seed);
        f_.write(reinterpret_cast<const char*>(h.data()), std::streamsize(h.size()));
    }

    void append(const VideoSample& s) {
        if (std::uint32_t(s.seq_len) != header_.seq_len ||
            std::uint32_t(s.num_objects) != header_.num_objects)
            throw std::runtime_error("container: sample shape mismatch");
        using namespace container_detail;
        std::vector<std::uint8_t> buf;
        buf.reserve(header_.sample_bytes());
        put_le(buf, s.seed);
        for (float v : s.corrupted) buf.push_back(quantize(v));
        for (float v : s.complete) buf.push_back(quantize(v));
        buf.insert(buf.end(), s.missing.begin(), s.missing.end());
        f_.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
        ++written_;
    }

    /// Flushes and atomically renames into place.
    void finish() {
        if (written_ != header_.count)
            throw std::runtime_error("container: wrote " + std::to_string(written_) +
                                     " of " + std::to_string(header_.count) + " samples");
        f_.close();
        std::filesystem::rename(tmp_, path_);
    }

private:
    std::string path_, tmp_;
    ContainerHeader header_;
    std::ofstream f_;
    std::uint32_t written_ = 0;
};

/// Stored sample, dequantized to floats. Per-object layers are not stored;
/// they are regenerated from (glyph_source, scenario, sample seed).
struct StoredSample {
    std::uint64_t seed = 0;
    std::vector<float> corrupted, complete;
    std::vector<std::uint8_t> missing;
};

class ContainerReader {
public:
    explicit ContainerReader(const std::string& path) : f_(path, std::ios::binary) {
        using namespace container_detail;
        if (!f_) throw std::runtime_error("cannot open " + path);
        std::uint8_t h[kHeaderBytes];
        f_.read(reinterpret_cast<char*>(h), kHeaderBytes);
        if (!f_ || std::memcmp(h, kMagic, 5) != 0)
            throw std::runtime_error(path + ": not a DIVE1 container");
        header_.version = h[5];
        if (header_.version != 1)
            throw std::runtime_error(path + ": unsupported container version");
        header_.scenario = Scenario(h[6]);
        header_.glyph_source = GlyphSource(h[7]);
        header_.count = get_le<std::uint32_t>(h + 9);
        header_.num_objects = get_le<std::uint32_t>(h + 13);
        header_.seq_len = get_le<std::uint32_t>(h + 17);
        header_.height = get_le<std::uint32_t>(h + 21);
        header_.width = get_le<std::uint32_t>(h + 25);
        header_.base_seed = get_le<std::uint64_t>(h + 29);
    }

    const ContainerHeader& header() const { return header_; }

    StoredSample read(std::uint32_t index) {
        if (index >= header_.count) throw std::out_of_range("container index");
        using namespace container_detail;
        const std::size_t off = kHeaderBytes + std::size_t(index) * header_.sample_bytes();
        f_.seekg(std::streamoff(off));
        std::vector<std::uint8_t> buf(header_.sample_bytes());
        f_.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
        if (!f_) throw std::runtime_error("container: truncated sample");

        StoredSample s;
        s.seed = get_le<std::uint64_t>(buf.data());
        const std::size_t fb = header_.frames_bytes();
        s.corrupted.resize(fb);
        s.complete.resize(fb);
        for (std::size_t i = 0; i < fb; ++i) s.corrupted[i] = float(buf[8 + i]) / 255.f;
        for (std::size_t i = 0; i < fb; ++i) s.complete[i] = float(buf[8 + fb + i]) / 255.f;
        s.missing.assign(buf.begin() + 8 + 2 * fb, buf.end());
        return s;
    }

private:
    ContainerHeader header_;
    std::ifstream f_;
};

/// Writes `count` generated samples; sample i uses stream (base_seed, i).
inline void write_dataset(const std::string& path, const GlyphSet& glyphs,
                          const ScenarioConfig& cfg, Scenario scenario, GlyphSource source,
                          std::uint32_t count, std::uint64_t base_seed,
                          const std::function<void(std::uint32_t)>& progress = {}) {
    ContainerHeader h;
    h.scenario = scenario;
    h.glyph_source = source;
    h.count = count;
    h.num_objects = std::uint32_t(cfg.num_objects);
    h.seq_len = std::uint32_t(cfg.seq_len);
    h.height = h.width = std::uint32_t(cfg.frame_size);
    h.base_seed = base_seed;
    ContainerWriter w(path, h);
    for (std::uint32_t i = 0; i < count; ++i) {
        w.append(make_sample(glyphs, cfg, scenario, mix_seed({base_seed, i})));
        if (progress) progress(i + 1);
    }
    w.finish();
}

}  // namespace dive
