// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hchunk/model.hpp"
#include "hchunk/router.hpp"
#include "hchunk/schedule.hpp"

namespace hchunk {

struct ScheduleSettings {
    std::size_t total_steps = 2000;
    double warmup_fraction = 0.6;
    std::vector<double> n_init{5.0};
    std::vector<double> n_final{6.5};
    double gamma = 1.05;
    double tau = 0.05;
    std::size_t window = 100;

    bool operator==(const ScheduleSettings&) const = default;
    CompressionScheduleConfig resolve() const;
};

struct OptimizerSettings {
    double peak_lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double weight_decay = 0.1;
    double eps = 1e-8;
    double grad_clip = 1.0;  // global norm; 0 disables
    double warmup_fraction = 0.10;
    double decay_fraction = 0.20;

    bool operator==(const OptimizerSettings&) const = default;
    LrScheduleConfig lr_schedule() const { return {peak_lr, warmup_fraction, decay_fraction}; }
};

struct DataSettings {
    std::string train = "data/corpus/train";
    std::string heldout = "data/corpus/heldout";
    std::size_t context = 512;
    std::size_t batch_size = 8;
    std::uint8_t separator = 0;

    bool operator==(const DataSettings&) const = default;
};

struct RunConfig {
    ModelConfig model;
    GateMode gate = GateMode::kConfidence;
    ScheduleSettings schedule;
    double alpha = 0.03;
    OptimizerSettings optimizer;
    DataSettings data;
    std::uint64_t seed = 0;
    std::string output_dir = "runs/default";
    std::size_t checkpoint_every = 500;  // 0: only at the end

    bool operator==(const RunConfig&) const = default;

    /// Throws DomainError when any module invariant fails.
    void validate() const;
};

std::string to_string(GateMode mode);
GateMode parse_gate_mode(const std::string& name);

/// Pretty JSON with every field present.
std::string config_to_json(const RunConfig& config);
/// Missing keys take defaults; unknown keys and ill-typed values throw DomainError.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace hchunk
