// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hchunk/config.hpp"

namespace hchunk::testing {

inline std::string tiny_text(std::size_t n, std::uint32_t seed = 3) {
    static const char* words[] = {"the ", "cat ", "sat ", "on ", "a ", "mat ", "and ", "then ", "ran. ", "Of ", "course "};
    std::mt19937 rng(seed);
    std::string s;
    while (s.size() < n) {
        s += words[rng() % std::size(words)];
    }
    s.resize(n);
    return s;
}

inline std::shared_ptr<const std::vector<std::uint8_t>> tiny_corpus(std::size_t n = 4096) {
    const std::string s = tiny_text(n);
    return std::make_shared<const std::vector<std::uint8_t>>(s.begin(), s.end());
}

inline RunConfig tiny_config(const std::filesystem::path& out, std::size_t steps = 12) {
    RunConfig c;
    c.model.stages = {StageConfig{8, 1, 1, 2, 2.0}};
    c.model.main_layers = 1;
    c.model.max_seq_len = 32;
    c.data.context = 32;
    c.data.batch_size = 2;
    c.schedule.total_steps = steps;
    c.schedule.warmup_fraction = 0.5;
    c.schedule.window = 3;
    c.schedule.tau = 1.0;
    c.checkpoint_every = 4;
    c.output_dir = out.string();
    c.seed = 7;
    return c;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("hchunk_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace hchunk::testing
