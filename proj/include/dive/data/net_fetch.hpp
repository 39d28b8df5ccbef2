// Copyright (c) 2026 DIVE contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <httplib.h>

#include "dive/data/glyphs.hpp"

namespace dive {

inline bool fetch_verified(const std::string& host, int port, const RemoteFile& file,
                           const std::filesystem::path& dir, std::string* error) {
    httplib::Client client(host, port);
    client.set_read_timeout(60, 0);
    auto res = client.Get(file.url_path.c_str());
    if (!res || res->status != 200) {
        if (error) *error = "GET " + file.url_path + " failed";
        return false;
    }
    const std::string digest = Sha256::of(res->body.data(), res->body.size());
    if (!file.sha256.empty() && digest != file.sha256) {
        if (error)
            *error = file.filename + ": checksum mismatch (got " + digest + ", want " +
                     file.sha256 + ")";
        return false;
    }
    std::vector<std::uint8_t> payload(res->body.begin(), res->body.end());
    if (file.gzipped) payload = gunzip(payload);

    std::filesystem::create_directories(dir);
    const auto tmp = dir / (file.filename + ".tmp");
    const auto dst = dir / file.filename;
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) {
            if (error) *error = "cannot write " + tmp.string();
            return false;
        }
        f.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    }
    std::filesystem::rename(tmp, dst);
    return true;
}

/// The four canonical MNIST archives. Checksums must be supplied by the
/// caller (CLI flag or lock file); an empty checksum skips verification
/// with a warning at the call site.
inline std::vector<RemoteFile> mnist_remote_files(const std::vector<std::string>& sha256s = {}) {
    std::vector<RemoteFile> files = {
        {"/mnist/train-images-idx3-ubyte.gz", "train-images-idx3-ubyte", "", true},
        {"/mnist/train-labels-idx1-ubyte.gz", "train-labels-idx1-ubyte", "", true},
        {"/mnist/t10k-images-idx3-ubyte.gz", "t10k-images-idx3-ubyte", "", true},
        {"/mnist/t10k-labels-idx1-ubyte.gz", "t10k-labels-idx1-ubyte", "", true},
    };
    for (std::size_t i = 0; i < files.size() && i < sha256s.size(); ++i)
        files[i].sha256 = sha256s[i];
    return files;
}

}  // namespace dive
