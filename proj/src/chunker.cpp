// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/chunker.hpp"

#include <string>

#include "hchunk/error.hpp"
#include "hchunk/ndtensor/ops.hpp"

namespace hchunk {

std::vector<std::size_t> ChunkSegmentation::sizes() const {
    std::vector<std::size_t> out;
    out.reserve(spans.size());
    for (const ChunkSpan& s : spans) {
        out.push_back(s.size());
    }
    return out;
}

std::vector<std::size_t> ChunkSegmentation::boundary_positions() const {
    std::vector<std::size_t> out;
    out.reserve(spans.size());
    for (const ChunkSpan& s : spans) {
        out.push_back(s.begin);
    }
    return out;
}

std::vector<std::size_t> ChunkSegmentation::chunk_of_position() const {
    std::vector<std::size_t> out(length);
    for (std::size_t j = 0; j < spans.size(); ++j) {
        for (std::size_t t = spans[j].begin; t < spans[j].end; ++t) {
            out[t] = j;
        }
    }
    return out;
}

ChunkSegmentation segment(std::span<const std::uint8_t> mask) {
    if (mask.empty() || mask.front() != 1) {
        throw ContractError("segment: the first position must be a boundary");
    }
    ChunkSegmentation seg;
    seg.length = mask.size();
    std::size_t start = 0;
    for (std::size_t t = 1; t < mask.size(); ++t) {
        if (mask[t] != 0) {
            seg.spans.push_back({start, t});
            start = t;
        }
    }
    seg.spans.push_back({start, mask.size()});
    return seg;
}

Var chunk_select(const Var& h, std::span<const std::uint8_t> mask) {
    if (mask.size() != h.value().rows()) {
        throw DimensionError("chunk_select: mask of length " + std::to_string(mask.size()) + " for " +
                             shape_string(h.shape()));
    }
    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < mask.size(); ++t) {
        if (mask[t] != 0) {
            idx.push_back(t);
        }
    }
    if (idx.empty()) {
        throw ContractError("chunk_select: mask selects no positions");
    }
    return gather_rows(h, idx);
}

Var dechunk(const Var& z, const ChunkSegmentation& seg, const Var& p) {
    if (z.value().rows() != seg.chunk_count()) {
        throw DimensionError("dechunk: " + std::to_string(z.value().rows()) + " chunk vectors for " +
                             std::to_string(seg.chunk_count()) + " spans");
    }
    if (p.value().size() != seg.length) {
        throw DimensionError("dechunk: p of length " + std::to_string(p.value().size()) + " for " +
                             std::to_string(seg.length) + " positions");
    }
    const Var expanded = gather_rows(z, seg.chunk_of_position());
    const std::size_t first = 0;
    const Var y0 = reshape(gather_rows(expanded, std::span(&first, 1)), {z.value().cols()});
    return ema_scan(reshape(p, {seg.length}), expanded, y0);
}

Var gated_residual(const Var& y, const Var& gate, const Var& h_enc, const Var& w_res) {
    return row_scale(y, gate) + matmul(h_enc, w_res);
}

}  // namespace hchunk
