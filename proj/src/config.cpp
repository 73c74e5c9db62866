// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hchunk/error.hpp"

namespace hchunk {

using nlohmann::json;

CompressionScheduleConfig ScheduleSettings::resolve() const {
    CompressionScheduleConfig c;
    c.total_steps = total_steps;
    c.warmup_steps = static_cast<std::size_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
    c.n_init = n_init;
    c.n_final = n_final;
    c.gamma = gamma;
    c.tau = tau;
    c.window = window;
    return c;
}

void RunConfig::validate() const {
    model.validate();
    if (!(schedule.warmup_fraction >= 0.0 && schedule.warmup_fraction < 1.0)) {
        throw DomainError("schedule.warmup_fraction must lie in [0, 1)");
    }
    const auto sched = schedule.resolve();
    sched.validate();
    if (sched.stages() != model.stages.size()) {
        throw DomainError("schedule lists " + std::to_string(sched.stages()) + " targets for " +
                          std::to_string(model.stages.size()) + " stages");
    }
    if (!(alpha >= 0.0)) {
        throw DomainError("alpha must be >= 0");
    }
    optimizer.lr_schedule().validate();
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
        throw DomainError("optimizer betas must lie in [0, 1)");
    }
    if (!(optimizer.weight_decay >= 0.0) || !(optimizer.eps > 0.0) || !(optimizer.grad_clip >= 0.0)) {
        throw DomainError("optimizer weight_decay and grad_clip must be >= 0 and eps > 0");
    }
    if (data.context == 0 || data.batch_size == 0) {
        throw DomainError("data.context and data.batch_size must be positive");
    }
    if (data.context > model.max_seq_len) {
        throw DomainError("data.context exceeds model.max_seq_len");
    }
}

std::string to_string(GateMode mode) { return mode == GateMode::kConfidence ? "confidence" : "straight_through"; }

GateMode parse_gate_mode(const std::string& name) {
    if (name == "confidence") {
        return GateMode::kConfidence;
    }
    if (name == "straight_through") {
        return GateMode::kStraightThrough;
    }
    throw DomainError("unknown gate mode '" + name + "' (expected confidence or straight_through)");
}

namespace {

json stage_json(const StageConfig& s) {
    return {{"width", s.width},
            {"encoder_layers", s.encoder_layers},
            {"decoder_layers", s.decoder_layers},
            {"heads", s.heads},
            {"ffn_multiplier", s.ffn_multiplier}};
}

// Reads j[key] into out when present and rejects keys outside `allowed`.
class Reader {
   public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) {
            throw DomainError(where_ + " must be an object");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw DomainError(where_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key())) {
                throw DomainError("unknown config key " + where_ + "." + item.key());
            }
        }
    }

   private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

StageConfig read_stage(const json& j, const std::string& where) {
    StageConfig s;
    Reader r(j, where);
    r.get("width", s.width);
    r.get("encoder_layers", s.encoder_layers);
    r.get("decoder_layers", s.decoder_layers);
    r.get("heads", s.heads);
    r.get("ffn_multiplier", s.ffn_multiplier);
    r.finish();
    return s;
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
    json stages = json::array();
    for (const auto& s : c.model.stages) {
        stages.push_back(stage_json(s));
    }
    json j = {
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"checkpoint_every", c.checkpoint_every},
        {"model",
         {{"stages", stages},
          {"main_layers", c.model.main_layers},
          {"main_width", c.model.main_width},
          {"main_heads", c.model.main_heads},
          {"main_ffn_multiplier", c.model.main_ffn_multiplier},
          {"max_seq_len", c.model.max_seq_len},
          {"rope_base", c.model.rope_base},
          {"force_boundaries", c.model.force_boundaries},
          {"gate", to_string(c.gate)}}},
        {"schedule",
         {{"total_steps", c.schedule.total_steps},
          {"warmup_fraction", c.schedule.warmup_fraction},
          {"n_init", c.schedule.n_init},
          {"n_final", c.schedule.n_final},
          {"gamma", c.schedule.gamma},
          {"tau", c.schedule.tau},
          {"window", c.schedule.window}}},
        {"objective", {{"alpha", c.alpha}}},
        {"optimizer",
         {{"peak_lr", c.optimizer.peak_lr},
          {"beta1", c.optimizer.beta1},
          {"beta2", c.optimizer.beta2},
          {"weight_decay", c.optimizer.weight_decay},
          {"eps", c.optimizer.eps},
          {"grad_clip", c.optimizer.grad_clip},
          {"warmup_fraction", c.optimizer.warmup_fraction},
          {"decay_fraction", c.optimizer.decay_fraction}}},
        {"data",
         {{"train", c.data.train},
          {"heldout", c.data.heldout},
          {"context", c.data.context},
          {"batch_size", c.data.batch_size},
          {"separator", c.data.separator}}},
    };
    return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Reader top(j, "config");
    top.get("seed", c.seed);
    top.get("output_dir", c.output_dir);
    top.get("checkpoint_every", c.checkpoint_every);
    if (const json* m = top.child("model")) {
        Reader r(*m, "model");
        if (const json* stages = r.child("stages")) {
            if (!stages->is_array()) {
                throw DomainError("model.stages must be an array");
            }
            c.model.stages.clear();
            for (std::size_t i = 0; i < stages->size(); ++i) {
                c.model.stages.push_back(read_stage(stages->at(i), "model.stages[" + std::to_string(i) + "]"));
            }
        }
        r.get("main_layers", c.model.main_layers);
        r.get("main_width", c.model.main_width);
        r.get("main_heads", c.model.main_heads);
        r.get("main_ffn_multiplier", c.model.main_ffn_multiplier);
        r.get("max_seq_len", c.model.max_seq_len);
        r.get("rope_base", c.model.rope_base);
        r.get("force_boundaries", c.model.force_boundaries);
        std::string gate = to_string(c.gate);
        r.get("gate", gate);
        c.gate = parse_gate_mode(gate);
        r.finish();
    }
    if (const json* s = top.child("schedule")) {
        Reader r(*s, "schedule");
        r.get("total_steps", c.schedule.total_steps);
        r.get("warmup_fraction", c.schedule.warmup_fraction);
        r.get("n_init", c.schedule.n_init);
        r.get("n_final", c.schedule.n_final);
        r.get("gamma", c.schedule.gamma);
        r.get("tau", c.schedule.tau);
        r.get("window", c.schedule.window);
        r.finish();
    }
    if (const json* o = top.child("objective")) {
        Reader r(*o, "objective");
        r.get("alpha", c.alpha);
        r.finish();
    }
    if (const json* o = top.child("optimizer")) {
        Reader r(*o, "optimizer");
        r.get("peak_lr", c.optimizer.peak_lr);
        r.get("beta1", c.optimizer.beta1);
        r.get("beta2", c.optimizer.beta2);
        r.get("weight_decay", c.optimizer.weight_decay);
        r.get("eps", c.optimizer.eps);
        r.get("grad_clip", c.optimizer.grad_clip);
        r.get("warmup_fraction", c.optimizer.warmup_fraction);
        r.get("decay_fraction", c.optimizer.decay_fraction);
        r.finish();
    }
    if (const json* d = top.child("data")) {
        Reader r(*d, "data");
        r.get("train", c.data.train);
        r.get("heldout", c.data.heldout);
        r.get("context", c.data.context);
        r.get("batch_size", c.data.batch_size);
        r.get("separator", c.data.separator);
        r.finish();
    }
    top.finish();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

}  // namespace hchunk
