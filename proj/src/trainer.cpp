// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/trainer.hpp"

#include <malloc.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "hchunk/error.hpp"
#include "hchunk/ndtensor/ops.hpp"
#include "hchunk/objective.hpp"

namespace hchunk {

void tune_allocator() {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 << 20);
}

namespace {

std::shared_ptr<const std::vector<std::uint8_t>> ensure_corpus(const RunConfig& config,
                                                               std::shared_ptr<const std::vector<std::uint8_t>> corpus) {
    if (corpus) {
        return corpus;
    }
    return std::make_shared<const std::vector<std::uint8_t>>(load_corpus(config.data.train, config.data.separator).bytes);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

Trainer::Trainer(RunConfig config, std::shared_ptr<const std::vector<std::uint8_t>> corpus)
    : Trainer((config.validate(), std::move(config)), std::move(corpus), true) {}

Trainer::Trainer(RunConfig config, std::shared_ptr<const std::vector<std::uint8_t>> corpus, bool)
    : config_(std::move(config)),
      corpus_(ensure_corpus(config_, std::move(corpus))),
      model_(config_.model, config_.seed),
      optimizer_(model_.parameters(), config_.optimizer),
      schedule_(config_.schedule.resolve()),
      stream_(corpus_, config_.data.context, config_.data.batch_size, config_.seed),
      last_n_curr_(config_.schedule.n_init) {}

Trainer Trainer::from_checkpoint(const Checkpoint& ck, std::shared_ptr<const std::vector<std::uint8_t>> corpus) {
    RunConfig config = config_from_json(ck.config_json);
    config.validate();
    Trainer t(std::move(config), std::move(corpus), true);
    auto& params = t.model_.parameters();
    if (ck.params.size() != params.size()) {
        throw DataError("checkpoint holds " + std::to_string(ck.params.size()) + " tensors, the config expects " +
                        std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (ck.params[i].name != params[i].name || ck.params[i].value.shape() != params[i].value.shape()) {
            throw DataError("checkpoint tensor " + ck.params[i].name + " does not match the config");
        }
        params[i].value = ck.params[i].value;
    }
    try {
        t.optimizer_.restore(ck.optimizer_steps, ck.first_moments, ck.second_moments);
    } catch (const ContractError& e) {
        throw DataError(std::string("checkpoint optimizer state: ") + e.what());
    }
    t.schedule_.restore_history(ck.loss_history);
    t.stream_.restore(ck.stream);
    t.step_ = ck.step;
    t.last_n_curr_ = ck.last_n_curr;
    return t;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ck;
    ck.config_json = config_to_json(config_);
    ck.step = step_;
    for (const auto& p : model_.parameters()) {
        ck.params.push_back(p);
    }
    ck.optimizer_steps = optimizer_.steps();
    ck.first_moments = optimizer_.first_moments();
    ck.second_moments = optimizer_.second_moments();
    ck.loss_history.assign(schedule_.history().begin(), schedule_.history().end());
    ck.last_n_curr = last_n_curr_;
    ck.stream = stream_.state();
    return ck;
}

StepTelemetry Trainer::step() {
    const std::size_t t = step_;
    const std::size_t stages = config_.model.stages.size();
    StepTelemetry rec;
    rec.step = t;
    rec.n_sched = schedule_.scheduled(t);
    rec.n_curr = schedule_.current(t);
    rec.triggered = schedule_.triggered();
    rec.lr = lr_at(t, config_.optimizer.lr_schedule(), config_.schedule.total_steps);

    Batch batch = stream_.next();
    const auto& params = model_.parameters();
    std::vector<Array> grads;
    grads.reserve(params.size());
    for (const auto& p : params) {
        grads.emplace_back(p.value.shape(), 0.0);
    }
    std::vector<std::size_t> length(stages, 0), chunks(stages, 0);
    std::vector<double> prob_mass(stages, 0.0);
    std::size_t bytes = 0;
    double ce = 0.0, total = 0.0, bal = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size);
    ForwardOptions options;
    options.gate = config_.gate;

    for (std::size_t i = 0; i < batch.size; ++i) {
        Tape tape;
        auto out = model_.forward(tape, batch.inputs(i), options);
        auto loss = total_loss(out.logits, batch.targets(i), out.stages, rec.n_curr, config_.alpha);
        const double value = loss.total.value().item();
        ce += loss.cross_entropy;
        bal += loss.balancing;
        total += value;
        bytes += batch.context;
        for (std::size_t s = 0; s < stages; ++s) {
            const auto& tel = out.stages[s].telemetry;
            length[s] += tel.length;
            chunks[s] += tel.chunks;
            prob_mass[s] += tel.y_prob * static_cast<double>(tel.length);
        }
        if (!finite(value)) {
            rec.ce = ce * inv_batch;
            rec.loss = total * inv_batch;
            throw NonFiniteLoss("non-finite loss at step " + std::to_string(t) + ", sequence " + std::to_string(i), t,
                                std::move(batch), rec);
        }
        tape.backward(inv_batch * loss.total);
        for (std::size_t j = 0; j < grads.size(); ++j) {
            if (tape.has_grad(out.params[j])) {
                auto dst = grads[j].data();
                const auto src = out.params[j].grad().data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += src[k];
                }
            }
        }
    }

    rec.ce = ce * inv_batch;
    rec.bpb = rec.ce / std::numbers::ln2;
    rec.loss = total * inv_batch;
    rec.balancing = bal * inv_batch;
    for (std::size_t s = 0; s < stages; ++s) {
        rec.bpic.push_back(bpic(bytes, chunks[s]));
        rec.y.push_back(static_cast<double>(chunks[s]) / static_cast<double>(length[s]));
        rec.y_prob.push_back(prob_mass[s] / static_cast<double>(length[s]));
    }
    rec.grad_norm = clip_global_norm(grads, config_.optimizer.grad_clip);
    if (!finite(rec.grad_norm)) {
        throw NonFiniteLoss("non-finite gradient at step " + std::to_string(t), t, std::move(batch), rec);
    }
    optimizer_.step(model_.parameters(), grads, rec.lr);
    for (const auto& p : model_.parameters()) {
        for (double x : p.value.data()) {
            if (!finite(x)) {
                throw NonFiniteLoss("non-finite parameter " + p.name + " after step " + std::to_string(t), t,
                                    std::move(batch), rec);
            }
        }
    }
    schedule_.record_loss(rec.ce);
    last_n_curr_ = rec.n_curr;
    ++step_;
    return rec;
}

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << text;
}

std::vector<StepTelemetry> read_jsonl_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        return {};
    }
    return read_jsonl(in);
}

void write_nan_dump(const fs::path& path, const NonFiniteLoss& e) {
    nlohmann::json j;
    j["error"] = e.what();
    j["step"] = e.step();
    j["context"] = e.batch().context;
    nlohmann::json windows = nlohmann::json::array();
    for (std::size_t i = 0; i < e.batch().size; ++i) {
        const auto w = e.batch().window(i);
        windows.push_back(std::vector<int>(w.begin(), w.end()));
    }
    j["batch"] = windows;
    j["telemetry"] = nlohmann::json::parse(to_json_line(e.partial()));
    write_text(path, j.dump(2) + "\n");
}

}  // namespace

TrainResult train(const RunConfig& config, const TrainOptions& options) {
    config.validate();
    const fs::path dir = config.output_dir;
    fs::create_directories(dir);
    TrainResult result;
    result.checkpoint = dir / "checkpoint.bin";
    result.telemetry = dir / "telemetry.jsonl";

    std::optional<Trainer> trainer;
    std::vector<StepTelemetry> history;
    if (options.resume) {
        const Checkpoint ck = load_checkpoint(*options.resume);
        RunConfig resumed = config_from_json(ck.config_json);
        resumed.output_dir = config.output_dir;
        Checkpoint adjusted = ck;
        adjusted.config_json = config_to_json(resumed);
        trainer.emplace(Trainer::from_checkpoint(adjusted));
        for (auto& r : read_jsonl_file(result.telemetry)) {
            if (r.step < ck.step) {
                history.push_back(std::move(r));
            }
        }
    } else {
        trainer.emplace(config);
    }
    write_text(dir / "config.json", config_to_json(trainer->config()) + "\n");
    {
        std::ofstream out(result.telemetry, std::ios::trunc);
        write_jsonl(out, history);
    }
    std::ofstream log(result.telemetry, std::ios::app);
    const std::size_t end = std::min(options.stop_at.value_or(trainer->config().schedule.total_steps),
                                     trainer->config().schedule.total_steps);
    const std::size_t every = trainer->config().checkpoint_every;
    while (trainer->current_step() < end) {
        StepTelemetry rec;
        try {
            rec = trainer->step();
        } catch (const NonFiniteLoss& e) {
            write_nan_dump(dir / "nan_dump.json", e);
            throw;
        }
        log << to_json_line(rec) << '\n';
        log.flush();
        history.push_back(rec);
        if (options.on_step) {
            options.on_step(rec);
        }
        if (every > 0 && trainer->current_step() % every == 0 && trainer->current_step() < end) {
            save_checkpoint(result.checkpoint, trainer->checkpoint());
        }
    }
    save_checkpoint(result.checkpoint, trainer->checkpoint());
    {
        std::ofstream csv(dir / "telemetry.csv", std::ios::trunc);
        write_csv(csv, history);
    }
    result.steps_completed = trainer->current_step();
    return result;
}

std::vector<StepTelemetry> read_telemetry(const fs::path& run_dir) {
    std::ifstream in(run_dir / "telemetry.jsonl");
    if (!in) {
        throw DataError("no telemetry.jsonl in " + run_dir.string());
    }
    return read_jsonl(in);
}

LoadedModel load_model(const fs::path& checkpoint) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    RunConfig config;
    try {
        config = config_from_json(ck.config_json);
        config.validate();
    } catch (const DomainError& e) {
        throw DataError(std::string("checkpoint config echo is invalid: ") + e.what());
    }
    LoadedModel out{config, Model(config.model, config.seed), ck.step, ck.last_n_curr};
    auto& params = out.model.parameters();
    if (ck.params.size() != params.size()) {
        throw DataError("checkpoint does not match its config echo");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (ck.params[i].name != params[i].name || ck.params[i].value.shape() != params[i].value.shape()) {
            throw DataError("checkpoint tensor " + ck.params[i].name + " does not match its config echo");
        }
        params[i].value = ck.params[i].value;
    }
    return out;
}

}  // namespace hchunk
