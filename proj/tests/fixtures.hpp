// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "hammerlab/hammerlab.hpp"

namespace hammerlab::testing {

inline std::pair<Dataset, Dataset> small_blobs(std::size_t n = 120, std::uint64_t seed = 1) {
    return split_dataset(synth_dataset(SynthKind::blobs, n, seed), 0.75, 1);
}

/// Tiny ViT trained briefly on blobs; cached because several suites share it.
inline const Model& trained_vit() {
    static const Model m = [] {
        auto [train_set, test_set] = small_blobs();
        Model x = init_model(ModelConfig{});
        TrainConfig tc;
        tc.epochs = 15;
        train(x, train_set, tc);
        return x;
    }();
    return m;
}

inline const Dataset& test_split() {
    static const Dataset d = small_blobs().second;
    return d;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() /
                ("hammerlab_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace hammerlab::testing
