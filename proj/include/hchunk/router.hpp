// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hchunk/ndtensor/array.hpp"
#include "hchunk/ndtensor/tape.hpp"

namespace hchunk {

/// Query/key projections of the boundary router, [d x d] each. Created as
/// identity matrices so that at initialisation the router scores the raw
/// cosine between consecutive hidden states.
struct RouterParams {
    Var wq;
    Var wk;
};

/// Router output for one sequence of length L.
///
/// Position t > 0 scores the transition from t-1 into t. Position 0 has no
/// predecessor: it is always a boundary, with p_0 = 1 and sigma_0 = -1.
struct BoundaryDecision {
    Var sigma;  // [L] cosine similarity
    Var p;      // [L] boundary probability in [0, 1]
    std::vector<std::uint8_t> mask;
    bool first_forced = true;

    std::size_t length() const noexcept { return mask.size(); }
    std::size_t boundary_count() const noexcept;
};

/// b_t = 1 iff p_t > 0.5, plus position 0 when `first_forced`.
std::vector<std::uint8_t> threshold_mask(const Array& p, bool first_forced = true);

/// sigma_t = cos(Wq h_{t-1}, Wk h_t), p_t = clip((1 - sigma_t) / 2, 0, 1).
/// Throws ContractError for an empty sequence.
BoundaryDecision compute_boundaries(const Var& h, const RouterParams& params);

/// Every position is a boundary (p = 1). Used by debug models.
BoundaryDecision all_boundaries(Tape& tape, std::size_t length);

/// Replays externally supplied probabilities and mask as constants.
BoundaryDecision fixed_boundaries(Tape& tape, Array p, std::vector<std::uint8_t> mask);

/// Forward value b, backward identity into p.
Var ste_mask(const BoundaryDecision& decision);

enum class GateMode {
    kConfidence,       // forward max(p, 1 - p) of the decision taken, exact gradient
    kStraightThrough,  // forward b, identity gradient into p
};

/// Per-position multiplier applied to the dechunked stream.
Var gate_values(const BoundaryDecision& decision, GateMode mode);

}  // namespace hchunk
