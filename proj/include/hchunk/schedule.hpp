// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <vector>

namespace hchunk {

struct CompressionScheduleConfig {
    std::size_t total_steps = 2000;
    std::size_t warmup_steps = 1200;
    std::vector<double> n_init{5.0};
    std::vector<double> n_final{6.5};
    double gamma = 1.05;
    double tau = 0.05;
    std::size_t window = 100;

    /// Throws DomainError unless 0 <= Tw < T, N_init > 1, gamma >= 1, W >= 1
    /// and both target vectors have the same non-zero length.
    void validate() const;
    std::size_t stages() const noexcept { return n_init.size(); }
};

/// Warm-up hold, then linear ramp with rho = min((t - Tw) / (T - Tw), 1).
std::vector<double> n_scheduled(const CompressionScheduleConfig& config, std::size_t t);

/// Scheduled targets plus the loss-triggered boost. The history holds one
/// loss per completed step and keeps only the last W values.
class CompressionSchedule {
   public:
    explicit CompressionSchedule(CompressionScheduleConfig config);

    const CompressionScheduleConfig& config() const noexcept { return config_; }

    std::vector<double> scheduled(std::size_t t) const { return n_scheduled(config_, t); }
    /// N_sched * gamma while the window is full and its mean is below tau.
    std::vector<double> current(std::size_t t) const;
    bool triggered() const;
    /// Mean of the last W losses; NaN until the window is full.
    double window_mean() const;

    void record_loss(double loss);
    const std::deque<double>& history() const noexcept { return history_; }
    void restore_history(std::vector<double> values);

   private:
    CompressionScheduleConfig config_;
    std::deque<double> history_;
};

struct LrScheduleConfig {
    double peak_lr = 2e-3;
    double warmup_fraction = 0.10;
    double decay_fraction = 0.20;

    void validate() const;
};

/// Warmup-stable-decay: linear 0 -> peak over the warmup fraction, flat until
/// the decay phase starts at D = (1 - decay_fraction) T, then peak * sqrt(D / step).
double lr_at(std::size_t step, const LrScheduleConfig& config, std::size_t total_steps);

}  // namespace hchunk
