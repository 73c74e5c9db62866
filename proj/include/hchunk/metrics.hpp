// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hchunk/chunker.hpp"

namespace hchunk {

/// A non-negative rational kept as integers so identities can be checked exactly.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    Ratio inverse() const noexcept { return {den, num}; }
    /// Exact comparison by cross multiplication.
    bool operator==(const Ratio& other) const noexcept;
};

Ratio operator*(const Ratio& a, const Ratio& b);

/// Bytes per innermost chunk, L / M. Throws ContractError when M = 0.
Ratio bpic_ratio(std::size_t bytes, std::size_t chunks);
double bpic(std::size_t bytes, std::size_t chunks);
double bpic(const ChunkSegmentation& seg);
/// Realised boundary fraction M / L.
Ratio boundary_fraction(const ChunkSegmentation& seg);

/// ce / ln 2. Throws DomainError for negative input.
double bpb_from_byte_ce(double ce_nats_per_byte);
/// log2(ppl) * L_token / L_byte. Throws DomainError for ppl < 1 or L_byte = 0.
double bpb_from_token_ppl(double ppl, std::size_t token_length, std::size_t byte_length);

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct StepTelemetry {
    std::size_t step = 0;
    double ce = 0.0;        // nats per byte
    double bpb = 0.0;
    double loss = 0.0;      // total objective
    double balancing = 0.0;
    double lr = 0.0;
    double grad_norm = 0.0;
    bool triggered = false;
    std::vector<double> bpic;     // per stage, original bytes over that stage's chunks
    std::vector<double> y;        // per stage
    std::vector<double> y_prob;   // per stage
    std::vector<double> n_sched;  // per stage
    std::vector<double> n_curr;   // per stage

    bool operator==(const StepTelemetry&) const = default;
};

std::string to_json_line(const StepTelemetry& record);
/// Throws DataError on malformed input.
StepTelemetry from_json_line(const std::string& line);

std::vector<StepTelemetry> read_jsonl(std::istream& in);
void write_jsonl(std::ostream& out, std::span<const StepTelemetry> records);

/// Header plus one row per record; per-stage columns are suffixed _0, _1, ...
void write_csv(std::ostream& out, std::span<const StepTelemetry> records);
std::vector<StepTelemetry> read_csv(std::istream& in);

}  // namespace hchunk
