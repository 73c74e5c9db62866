// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/model.hpp"

#include <cmath>
#include <sstream>

#include "hchunk/error.hpp"
#include "hchunk/ndtensor/nn.hpp"
#include "hchunk/ndtensor/ops.hpp"

namespace hchunk {

std::size_t ModelConfig::resolved_main_width() const {
    return main_width != 0 ? main_width : stages.back().width;
}

std::size_t ModelConfig::resolved_main_heads() const {
    return main_heads != 0 ? main_heads : stages.back().heads;
}

double ModelConfig::resolved_main_ffn_multiplier() const {
    return main_ffn_multiplier > 0.0 ? main_ffn_multiplier : stages.back().ffn_multiplier;
}

namespace {

void check_mixer(std::size_t width, std::size_t heads, double multiplier, const std::string& where) {
    if (width == 0 || heads == 0 || width % heads != 0 || (width / heads) % 2 != 0) {
        throw DomainError(where + ": width must be a positive multiple of heads with an even head size");
    }
    if (!(multiplier > 0.0)) {
        throw DomainError(where + ": ffn multiplier must be positive");
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (stages.empty()) {
        throw DomainError("model needs at least one stage");
    }
    if (vocab != 256) {
        throw DomainError("vocab is fixed at 256");
    }
    if (max_seq_len == 0) {
        throw DomainError("max_seq_len must be positive");
    }
    for (std::size_t s = 0; s < stages.size(); ++s) {
        check_mixer(stages[s].width, stages[s].heads, stages[s].ffn_multiplier, "stage " + std::to_string(s));
    }
    check_mixer(resolved_main_width(), resolved_main_heads(), resolved_main_ffn_multiplier(), "main network");
}

std::size_t ffn_hidden(std::size_t width, double multiplier) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(multiplier * static_cast<double>(width))));
}

Parameter& ParameterStore::add(std::string name, Array value) {
    if (index_.contains(name)) {
        throw ContractError("duplicate parameter " + name);
    }
    index_.emplace(name, params_.size());
    params_.push_back({std::move(name), std::move(value)});
    return params_.back();
}

std::size_t ParameterStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw ContractError("unknown parameter " + name);
    }
    return it->second;
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += p.value.size();
    }
    return n;
}

namespace {

Array normal(const Shape& shape, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Array out(shape);
    for (double& v : out.data()) {
        v = dist(rng);
    }
    return out;
}

double fan_in_scale(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace

std::vector<Model::BlockIndex> Model::add_blocks(const std::string& prefix, std::size_t count, std::size_t width,
                                                 double multiplier, std::size_t depth, std::mt19937_64& rng) {
    const std::size_t hidden = ffn_hidden(width, multiplier);
    const double out_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(std::max<std::size_t>(depth, 1)));
    std::vector<BlockIndex> blocks;
    for (std::size_t i = 0; i < count; ++i) {
        const std::string base = prefix + "." + std::to_string(i) + ".";
        auto add = [&](const std::string& name, Array value) {
            params_.add(base + name, std::move(value));
            return params_.size() - 1;
        };
        BlockIndex b{};
        b.attn_norm = add("attn.norm", Array({width}, 1.0));
        b.wq = add("attn.wq", normal({width, width}, fan_in_scale(width), rng));
        b.wk = add("attn.wk", normal({width, width}, fan_in_scale(width), rng));
        b.wv = add("attn.wv", normal({width, width}, fan_in_scale(width), rng));
        b.wo = add("attn.wo", normal({width, width}, fan_in_scale(width) * out_scale, rng));
        b.ffn_norm = add("ffn.norm", Array({width}, 1.0));
        b.w_gate = add("ffn.w_gate", normal({width, hidden}, fan_in_scale(width), rng));
        b.w_up = add("ffn.w_up", normal({width, hidden}, fan_in_scale(width), rng));
        b.w_down = add("ffn.w_down", normal({hidden, width}, fan_in_scale(hidden) * out_scale, rng));
        blocks.push_back(b);
    }
    return blocks;
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t stages = config_.stages.size();
    const std::size_t d0 = config_.stages.front().width;

    embedding_ = params_.size();
    params_.add("embedding", normal({config_.vocab, d0}, 1.0, rng));

    stage_index_.resize(stages);
    for (std::size_t s = 0; s < stages; ++s) {
        const StageConfig& sc = config_.stages[s];
        const std::string prefix = "stage" + std::to_string(s);
        const std::size_t inner = s + 1 < stages ? config_.stages[s + 1].width : config_.resolved_main_width();
        StageIndex& idx = stage_index_[s];
        idx.encoder = add_blocks(prefix + ".encoder", sc.encoder_layers, sc.width, sc.ffn_multiplier,
                                 sc.encoder_layers, rng);
        idx.encoder_norm = params_.size();
        params_.add(prefix + ".encoder.norm", Array({sc.width}, 1.0));
        idx.router_wq = params_.size();
        params_.add(prefix + ".router.wq", Array::identity(sc.width));
        idx.router_wk = params_.size();
        params_.add(prefix + ".router.wk", Array::identity(sc.width));
        if (inner != sc.width) {
            idx.proj_in = params_.size();
            params_.add(prefix + ".proj_in", normal({sc.width, inner}, fan_in_scale(sc.width), rng));
            idx.proj_out = params_.size();
            params_.add(prefix + ".proj_out", normal({inner, sc.width}, fan_in_scale(inner), rng));
        }
        idx.residual = params_.size();
        params_.add(prefix + ".residual", Array({sc.width, sc.width}, 0.0));
        idx.decoder = add_blocks(prefix + ".decoder", sc.decoder_layers, sc.width, sc.ffn_multiplier,
                                 sc.decoder_layers, rng);
    }

    main_ = add_blocks("main", config_.main_layers, config_.resolved_main_width(),
                       config_.resolved_main_ffn_multiplier(), config_.main_layers, rng);
    main_norm_ = params_.size();
    params_.add("main.norm", Array({config_.resolved_main_width()}, 1.0));
    out_norm_ = params_.size();
    params_.add("out_norm", Array({d0}, 1.0));
    head_ = params_.size();
    params_.add("head", normal({d0, config_.vocab}, 0.02, rng));
}

std::string Model::parameter_report() const {
    std::ostringstream os;
    for (const auto& p : params_) {
        os << p.name << " " << shape_string(p.value.shape()) << " " << p.value.size() << "\n";
    }
    os << "total " << parameter_count() << "\n";
    return os.str();
}

Var Model::run_blocks(const std::vector<BlockIndex>& blocks, const Var& x, std::size_t heads,
                      const std::vector<Var>& vars) const {
    Var h = x;
    for (const BlockIndex& b : blocks) {
        h = attention_block(h, {vars[b.attn_norm], vars[b.wq], vars[b.wk], vars[b.wv], vars[b.wo]}, heads,
                            config_.rope_base);
        h = feed_forward_block(h, {vars[b.ffn_norm], vars[b.w_gate], vars[b.w_up], vars[b.w_down]});
    }
    return h;
}

Var Model::run_stage(std::size_t s, const Var& x, const std::vector<Var>& vars, const ForwardOptions& options,
                     std::vector<RoutedStage>& routed) const {
    Tape& tape = x.tape();
    const StageConfig& sc = config_.stages[s];
    const StageIndex& idx = stage_index_[s];

    Var h = run_blocks(idx.encoder, x, sc.heads, vars);
    h = rms_norm(h, vars[idx.encoder_norm]);

    BoundaryDecision decision;
    if (s < options.fixed_routing.size() && options.fixed_routing[s].has_value()) {
        const FixedRouting& fixed = *options.fixed_routing[s];
        if (fixed.mask.size() != h.value().rows()) {
            throw DimensionError("fixed routing for stage " + std::to_string(s) + " has the wrong length");
        }
        decision = fixed_boundaries(tape, fixed.p, fixed.mask);
    } else if (config_.force_boundaries) {
        decision = all_boundaries(tape, h.value().rows());
    } else {
        decision = compute_boundaries(h, {vars[idx.router_wq], vars[idx.router_wk]});
    }
    routed.push_back({decision.p, RouterTelemetry::from_decision(decision)});

    const ChunkSegmentation seg = segment(decision.mask);
    Var z = chunk_select(h, decision.mask);
    if (idx.proj_in != kNone) {
        z = matmul(z, vars[idx.proj_in]);
    }
    Var inner;
    if (s + 1 < config_.stages.size()) {
        inner = run_stage(s + 1, z, vars, options, routed);
    } else {
        inner = rms_norm(run_blocks(main_, z, config_.resolved_main_heads(), vars), vars[main_norm_]);
    }
    if (idx.proj_out != kNone) {
        inner = matmul(inner, vars[idx.proj_out]);
    }
    const Var y = dechunk(inner, seg, decision.p);
    Var out = gated_residual(y, gate_values(decision, options.gate), h, vars[idx.residual]);
    return run_blocks(idx.decoder, out, sc.heads, vars);
}

ForwardResult Model::forward(Tape& tape, std::span<const std::uint8_t> bytes, const ForwardOptions& options) const {
    if (bytes.empty()) {
        throw ContractError("forward: empty input");
    }
    if (bytes.size() > config_.max_seq_len) {
        throw DimensionError("forward: input of " + std::to_string(bytes.size()) + " bytes exceeds max_seq_len " +
                             std::to_string(config_.max_seq_len));
    }
    ForwardResult out;
    out.params.reserve(params_.size());
    for (const auto& p : params_) {
        out.params.push_back(options.track_gradients ? tape.variable(p.value) : tape.constant(p.value));
    }
    std::vector<std::size_t> ids(bytes.begin(), bytes.end());
    const Var x = gather_rows(out.params[embedding_], ids);
    const Var h = run_stage(0, x, out.params, options, out.stages);
    out.logits = matmul(rms_norm(h, out.params[out_norm_]), out.params[head_]);
    return out;
}

double innermost_compression(std::span<const RouterTelemetry> stages) {
    if (stages.empty() || stages.back().chunks == 0) {
        throw ContractError("innermost_compression: no routed stage");
    }
    return static_cast<double>(stages.front().length) / static_cast<double>(stages.back().chunks);
}

}  // namespace hchunk
