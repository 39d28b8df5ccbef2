// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0
//
// Run manifests: every artifact-producing command records its resolved
// configuration, seeds and the content hash of each artifact, so a run is
// reproducible from the manifest alone.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dive/util/sha256.hpp"

namespace dive {

struct RunManifest {
    std::string command;
    nlohmann::json resolved_config;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> artifacts;  // (path, sha256)

    void add_artifact(const std::string& path) {
        artifacts.emplace_back(path, Sha256::of_file(path));
    }

    void write(const std::string& path) const {
        nlohmann::json j;
        j["command"] = command;
        j["resolved-config"] = resolved_config;
        j["seed"] = seed;
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        j["timestamp-unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(now).count();
        auto& arts = j["artifacts"] = nlohmann::json::array();
        for (const auto& [p, h] : artifacts) arts.push_back({{"path", p}, {"sha256", h}});
        const std::string tmp = path + ".tmp";
        {
            std::ofstream f(tmp);
            if (!f) throw std::runtime_error("manifest: cannot open " + tmp);
            f << j.dump(2) << "\n";
        }
        std::filesystem::rename(tmp, path);
    }
};

/// Data root: $DIVE_DATA_DIR when set, ./data otherwise.
inline std::string data_root() {
    if (const char* env = std::getenv("DIVE_DATA_DIR")) return env;
    return "data";
}

}  // namespace dive
