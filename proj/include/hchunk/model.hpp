// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hchunk/chunker.hpp"
#include "hchunk/ndtensor/array.hpp"
#include "hchunk/ndtensor/tape.hpp"
#include "hchunk/objective.hpp"
#include "hchunk/router.hpp"

namespace hchunk {

struct StageConfig {
    std::size_t width = 64;
    std::size_t encoder_layers = 2;
    std::size_t decoder_layers = 2;
    std::size_t heads = 4;
    double ffn_multiplier = 2.0;

    bool operator==(const StageConfig&) const = default;
};

struct ModelConfig {
    std::vector<StageConfig> stages{StageConfig{}};
    std::size_t main_layers = 4;
    std::size_t main_width = 0;  // 0: innermost stage width
    std::size_t main_heads = 0;  // 0: innermost stage heads
    double main_ffn_multiplier = 0.0;  // 0: innermost stage multiplier
    std::size_t vocab = 256;
    std::size_t max_seq_len = 512;
    double rope_base = 10000.0;
    bool force_boundaries = false;  // debug: every position starts a chunk

    bool operator==(const ModelConfig&) const = default;

    std::size_t resolved_main_width() const;
    std::size_t resolved_main_heads() const;
    double resolved_main_ffn_multiplier() const;
    /// Throws DomainError on an inconsistent configuration.
    void validate() const;
};

std::size_t ffn_hidden(std::size_t width, double multiplier);

struct Parameter {
    std::string name;
    Array value;
};

class ParameterStore {
   public:
    Parameter& add(std::string name, Array value);
    std::size_t size() const noexcept { return params_.size(); }
    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }
    std::size_t index_of(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.contains(name); }
    std::size_t scalar_count() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

   private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct FixedRouting {
    Array p;
    std::vector<std::uint8_t> mask;
};

struct ForwardOptions {
    bool track_gradients = true;
    GateMode gate = GateMode::kConfidence;
    /// Per stage; an engaged entry replaces the router's decision.
    std::vector<std::optional<FixedRouting>> fixed_routing;
};

struct ForwardResult {
    Var logits;  // [L x 256], row t scores byte t + 1
    std::vector<RoutedStage> stages;
    std::vector<Var> params;  // aligned with the model's ParameterStore
};

class Model {
   public:
    Model(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    ParameterStore& parameters() noexcept { return params_; }
    const ParameterStore& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const { return params_.scalar_count(); }
    /// One line per tensor: name, shape, count; then the total.
    std::string parameter_report() const;

    /// Throws ContractError on empty input, DimensionError past max_seq_len.
    ForwardResult forward(Tape& tape, std::span<const std::uint8_t> bytes, const ForwardOptions& options = {}) const;

   private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    struct BlockIndex {
        std::size_t attn_norm, wq, wk, wv, wo;
        std::size_t ffn_norm, w_gate, w_up, w_down;
    };
    struct StageIndex {
        std::vector<BlockIndex> encoder, decoder;
        std::size_t encoder_norm = kNone;
        std::size_t router_wq = kNone, router_wk = kNone;
        std::size_t proj_in = kNone, proj_out = kNone;
        std::size_t residual = kNone;
    };

    std::vector<BlockIndex> add_blocks(const std::string& prefix, std::size_t count, std::size_t width,
                                       double multiplier, std::size_t depth, std::mt19937_64& rng);
    Var run_blocks(const std::vector<BlockIndex>& blocks, const Var& x, std::size_t heads,
                   const std::vector<Var>& vars) const;
    Var run_stage(std::size_t s, const Var& x, const std::vector<Var>& vars, const ForwardOptions& options,
                  std::vector<RoutedStage>& routed) const;

    ModelConfig config_;
    ParameterStore params_;
    std::size_t embedding_ = kNone;
    std::vector<StageIndex> stage_index_;
    std::vector<BlockIndex> main_;
    std::size_t main_norm_ = kNone;
    std::size_t out_norm_ = kNone;
    std::size_t head_ = kNone;
};

/// L_0 / M_innermost, the product of the per-stage ratios.
double innermost_compression(std::span<const RouterTelemetry> stages);

}  // namespace hchunk
