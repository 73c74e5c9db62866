// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hchunk/checkpoint.hpp"
#include "hchunk/config.hpp"
#include "hchunk/data.hpp"
#include "hchunk/error.hpp"
#include "hchunk/metrics.hpp"
#include "hchunk/model.hpp"
#include "hchunk/optimizer.hpp"
#include "hchunk/schedule.hpp"

namespace hchunk {

/// Keeps freed blocks in the heap instead of returning them to the OS, so
/// the per-step tapes reuse warm pages. Call once at process start.
void tune_allocator();

/// Raised by Trainer::step when the loss or a gradient is not finite. The
/// offending batch and the partial telemetry travel with the exception.
class NonFiniteLoss : public NumericalError {
   public:
    NonFiniteLoss(const std::string& what, std::size_t step, Batch batch, StepTelemetry partial)
        : NumericalError(what), step_(step), batch_(std::move(batch)), partial_(std::move(partial)) {}

    std::size_t step() const noexcept { return step_; }
    const Batch& batch() const noexcept { return batch_; }
    const StepTelemetry& partial() const noexcept { return partial_; }

   private:
    std::size_t step_;
    Batch batch_;
    StepTelemetry partial_;
};

/// The training loop state: model, optimizer, compression schedule and data
/// stream. One call to step() performs one optimizer update.
class Trainer {
   public:
    /// Fresh run. `corpus` defaults to loading config.data.train.
    explicit Trainer(RunConfig config, std::shared_ptr<const std::vector<std::uint8_t>> corpus = nullptr);
    /// Continues from a checkpoint; the checkpoint's config echo is authoritative.
    static Trainer from_checkpoint(const Checkpoint& checkpoint,
                                   std::shared_ptr<const std::vector<std::uint8_t>> corpus = nullptr);

    StepTelemetry step();
    bool done() const noexcept { return step_ >= config_.schedule.total_steps; }
    std::size_t current_step() const noexcept { return step_; }

    const RunConfig& config() const noexcept { return config_; }
    const Model& model() const noexcept { return model_; }
    const CompressionSchedule& schedule() const noexcept { return schedule_; }
    const std::vector<double>& last_n_curr() const noexcept { return last_n_curr_; }

    Checkpoint checkpoint() const;

   private:
    Trainer(RunConfig config, std::shared_ptr<const std::vector<std::uint8_t>> corpus, bool);

    RunConfig config_;
    std::shared_ptr<const std::vector<std::uint8_t>> corpus_;
    Model model_;
    AdamW optimizer_;
    CompressionSchedule schedule_;
    BatchStream stream_;
    std::size_t step_ = 0;
    std::vector<double> last_n_curr_;
};

struct TrainOptions {
    std::optional<std::filesystem::path> resume;
    /// Stop after this many completed steps instead of the configured total.
    std::optional<std::size_t> stop_at;
    std::function<void(const StepTelemetry&)> on_step;
};

struct TrainResult {
    std::size_t steps_completed = 0;
    std::filesystem::path checkpoint;
    std::filesystem::path telemetry;
};

/// Runs training inside config.output_dir: writes config.json, appends one
/// JSON line per step to telemetry.jsonl, exports telemetry.csv, and saves
/// checkpoint.bin every checkpoint_every steps and at the end. On a
/// non-finite loss it writes nan_dump.json and rethrows.
TrainResult train(const RunConfig& config, const TrainOptions& options = {});

/// Reads config.json, telemetry.jsonl and the like from a run directory.
std::vector<StepTelemetry> read_telemetry(const std::filesystem::path& run_dir);

/// Model and config rebuilt from a checkpoint.
struct LoadedModel {
    RunConfig config;
    Model model;
    std::size_t step = 0;
    std::vector<double> last_n_curr;
};
LoadedModel load_model(const std::filesystem::path& checkpoint);

}  // namespace hchunk
