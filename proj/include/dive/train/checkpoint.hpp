// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary checkpoints (parameters + optimizer state) with a JSON
// manifest carrying the iteration, run seed, resolved config and content
// hashes. Writes are atomic (temp file + rename).

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dive/core/nn.hpp"
#include "dive/util/sha256.hpp"

namespace dive {

namespace ckpt_detail {

constexpr char kMagic[8] = {'D', 'I', 'V', 'E', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ostream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace ckpt_detail

struct CheckpointMeta {
    long iteration = 0;
    long adam_t = 0;
    std::uint64_t run_seed = 0;
};

/// Writes params (+ optional Adam state) to `<path>`; returns its sha256.
template <typename S>
std::string save_checkpoint(const std::string& path, std::vector<ParamT<S>*> params,
                            const CheckpointMeta& meta, const std::vector<S>* adam_state) {
    using namespace ckpt_detail;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: cannot open " + tmp);
        f.write(kMagic, 8);
        write_pod<std::uint64_t>(f, std::uint64_t(meta.iteration));
        write_pod<std::uint64_t>(f, std::uint64_t(meta.adam_t));
        write_pod<std::uint64_t>(f, meta.run_seed);
        write_pod<std::uint32_t>(f, std::uint32_t(params.size()));
        for (const auto* p : params) {
            write_pod<std::uint32_t>(f, std::uint32_t(p->name.size()));
            f.write(p->name.data(), std::streamsize(p->name.size()));
            write_pod<std::uint32_t>(f, std::uint32_t(p->value.rows));
            write_pod<std::uint32_t>(f, std::uint32_t(p->value.cols));
            for (S v : p->value.v) write_pod<float>(f, float(v));
        }
        write_pod<std::uint8_t>(f, adam_state ? 1 : 0);
        if (adam_state) {
            write_pod<std::uint64_t>(f, std::uint64_t(adam_state->size()));
            for (S v : *adam_state) write_pod<float>(f, float(v));
        }
        if (!f) throw std::runtime_error("checkpoint: write failed (disk full?)");
    }
    std::filesystem::rename(tmp, path);
    return Sha256::of_file(path);
}

/// Loads parameters by name; every stored tensor must match an existing
/// param's shape. Returns meta; fills `adam_state` when present.
template <typename S>
CheckpointMeta load_checkpoint(const std::string& path, ParamStore<S>& store,
                               std::vector<S>* adam_state) {
    using namespace ckpt_detail;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error(path + ": not a DIVE checkpoint");
    CheckpointMeta meta;
    meta.iteration = long(read_pod<std::uint64_t>(f));
    meta.adam_t = long(read_pod<std::uint64_t>(f));
    meta.run_seed = read_pod<std::uint64_t>(f);
    const auto count = read_pod<std::uint32_t>(f);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const auto rows = read_pod<std::uint32_t>(f);
        const auto cols = read_pod<std::uint32_t>(f);
        ParamT<S>* p = store.find(name);
        if (!p) throw std::runtime_error("checkpoint: unknown parameter " + name);
        if (p->value.rows != int(rows) || p->value.cols != int(cols))
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        for (auto& v : p->value.v) v = S(read_pod<float>(f));
    }
    const auto has_adam = read_pod<std::uint8_t>(f);
    if (has_adam && adam_state) {
        const auto n = read_pod<std::uint64_t>(f);
        adam_state->resize(n);
        for (auto& v : *adam_state) v = S(read_pod<float>(f));
    }
    if (!f) throw std::runtime_error("checkpoint: truncated file");
    return meta;
}

inline void write_manifest(const std::string& path, const nlohmann::json& manifest) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw std::runtime_error("manifest: cannot open " + tmp);
        f << manifest.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace dive
