// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hchunk/data.hpp"
#include "hchunk/model.hpp"
#include "hchunk/router.hpp"

namespace hchunk {

struct EvalReport {
    std::size_t windows = 0;
    std::size_t bytes_scored = 0;  // next-byte targets
    double ce = 0.0;               // nats per byte, averaged over every target
    double bpb = 0.0;
    std::vector<double> bpic;    // per stage: input bytes over that stage's chunks, summed over windows
    std::vector<double> y;       // per stage
    std::vector<double> y_prob;  // per stage
    double compression = 0.0;    // bytes per innermost chunk
};

/// Full in-order pass over `bytes` with windows of `context` inputs.
/// Throws DataError when there is nothing to score.
EvalReport evaluate(const Model& model, std::span<const std::uint8_t> bytes, std::size_t context,
                    GateMode gate = GateMode::kConfidence);

struct PerturbationResult {
    PerturbationKind kind;
    double rate = 0.0;
    EvalReport report;
    double delta_bpb = 0.0;  // perturbed minus clean
};

struct PerturbationReport {
    EvalReport clean;
    std::vector<PerturbationResult> perturbed;
};

/// Evaluates the clean text and each of the five perturbations at its
/// default rate with the given seed.
PerturbationReport perturbation_eval(const Model& model, std::string_view text, std::size_t context,
                                     std::uint64_t seed, GateMode gate = GateMode::kConfidence);

std::string report_to_json(const EvalReport& report);
std::string report_to_json(const PerturbationReport& report);

struct ChunkAssignment {
    std::vector<double> p;            // per byte
    std::vector<std::uint8_t> mask;   // per byte
    std::vector<std::size_t> chunk;   // per byte, contiguous from 0
};

/// Outer-stage routing of every byte. Text longer than max_seq_len is routed
/// in consecutive windows, each of which starts a new chunk.
ChunkAssignment assign_chunks(const Model& model, std::span<const std::uint8_t> bytes);

enum class ChunkFormat { kText, kTsv, kSvg };
ChunkFormat parse_chunk_format(const std::string& name);

/// kText: blocks of a text row over a row of chunk ids (mod 10, so neighbours
/// always differ); kTsv: one row per byte; kSvg: coloured spans.
std::string render_chunks(const ChunkAssignment& chunks, std::span<const std::uint8_t> bytes, ChunkFormat format);

}  // namespace hchunk
