// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hchunk/ndtensor/tape.hpp"

namespace hchunk {

/// Half-open range [begin, end) of positions forming one chunk.
struct ChunkSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const ChunkSpan&) const = default;
};

/// Ordered, disjoint spans covering [0, length). Each span starts at a
/// boundary and runs up to the next one.
struct ChunkSegmentation {
    std::vector<ChunkSpan> spans;
    std::size_t length = 0;

    std::size_t chunk_count() const noexcept { return spans.size(); }
    std::vector<std::size_t> sizes() const;
    std::vector<std::size_t> boundary_positions() const;
    /// Chunk index of every position.
    std::vector<std::size_t> chunk_of_position() const;
};

/// Throws ContractError unless mask[0] == 1.
ChunkSegmentation segment(std::span<const std::uint8_t> mask);

/// Rows of h at boundary positions, in order. h: [L x d] -> [M x d].
Var chunk_select(const Var& h, std::span<const std::uint8_t> mask);

/// Repeats chunk vector z_j across span j and smooths with the EMA
/// y_t = p_t c_t + (1 - p_t) y_{t-1}, starting from the first chunk vector.
Var dechunk(const Var& z, const ChunkSegmentation& seg, const Var& p);

/// y * gate (row-wise) + h_enc W_res.
Var gated_residual(const Var& y, const Var& gate, const Var& h_enc, const Var& w_res);

}  // namespace hchunk
