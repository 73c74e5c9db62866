// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/schedule.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hchunk/error.hpp"

namespace hchunk {

void CompressionScheduleConfig::validate() const {
    if (warmup_steps >= total_steps) {
        throw DomainError("degenerate schedule: warm-up " + std::to_string(warmup_steps) + " must be below total " +
                          std::to_string(total_steps));
    }
    if (n_init.empty() || n_init.size() != n_final.size()) {
        throw DomainError("schedule targets need one N_init and one N_final per stage");
    }
    for (double n : n_init) {
        if (!(n > 1.0)) {
            throw DomainError("N_init must exceed 1");
        }
    }
    for (double n : n_final) {
        if (!(n > 1.0)) {
            throw DomainError("N_final must exceed 1");
        }
    }
    if (!(gamma >= 1.0)) {
        throw DomainError("gamma must be >= 1");
    }
    if (window == 0) {
        throw DomainError("window must be >= 1");
    }
}

std::vector<double> n_scheduled(const CompressionScheduleConfig& config, std::size_t t) {
    config.validate();
    if (t < config.warmup_steps) {
        return config.n_init;
    }
    const double rho = std::min(static_cast<double>(t - config.warmup_steps) /
                                    static_cast<double>(config.total_steps - config.warmup_steps),
                                1.0);
    std::vector<double> out(config.n_init.size());
    for (std::size_t s = 0; s < out.size(); ++s) {
        out[s] = config.n_init[s] + rho * (config.n_final[s] - config.n_init[s]);
    }
    return out;
}

CompressionSchedule::CompressionSchedule(CompressionScheduleConfig config) : config_(std::move(config)) {
    config_.validate();
}

double CompressionSchedule::window_mean() const {
    if (history_.size() < config_.window) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0.0;
    for (auto it = history_.end() - static_cast<std::ptrdiff_t>(config_.window); it != history_.end(); ++it) {
        sum += *it;
    }
    return sum / static_cast<double>(config_.window);
}

bool CompressionSchedule::triggered() const {
    return history_.size() >= config_.window && window_mean() < config_.tau;
}

std::vector<double> CompressionSchedule::current(std::size_t t) const {
    std::vector<double> n = scheduled(t);
    if (triggered()) {
        for (double& v : n) {
            v *= config_.gamma;
        }
    }
    return n;
}

void CompressionSchedule::record_loss(double loss) {
    history_.push_back(loss);
    while (history_.size() > config_.window) {
        history_.pop_front();
    }
}

void CompressionSchedule::restore_history(std::vector<double> values) {
    history_.clear();
    for (double v : values) {
        record_loss(v);
    }
}

void LrScheduleConfig::validate() const {
    const bool in_range = warmup_fraction > 0.0 && warmup_fraction < 1.0 && decay_fraction > 0.0 &&
                          decay_fraction < 1.0 && warmup_fraction + decay_fraction < 1.0;
    if (!in_range) {
        throw DomainError("learning-rate fractions must lie in (0, 1) and sum below 1");
    }
    if (!(peak_lr > 0.0)) {
        throw DomainError("peak learning rate must be positive");
    }
}

double lr_at(std::size_t step, const LrScheduleConfig& config, std::size_t total_steps) {
    config.validate();
    if (total_steps == 0) {
        throw DomainError("learning-rate schedule needs at least one step");
    }
    const double t = static_cast<double>(step);
    const double total = static_cast<double>(total_steps);
    const double warm = config.warmup_fraction * total;
    const double decay_start = (1.0 - config.decay_fraction) * total;
    if (t < warm) {
        return config.peak_lr * t / warm;
    }
    if (t <= decay_start) {
        return config.peak_lr;
    }
    return config.peak_lr * std::sqrt(decay_start / t);
}

}  // namespace hchunk
