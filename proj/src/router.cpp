// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/router.hpp"

#include <algorithm>
#include <numeric>

#include "hchunk/error.hpp"
#include "hchunk/ndtensor/ops.hpp"

namespace hchunk {

std::size_t BoundaryDecision::boundary_count() const noexcept {
    return static_cast<std::size_t>(std::ranges::count(mask, std::uint8_t{1}));
}

std::vector<std::uint8_t> threshold_mask(const Array& p, bool first_forced) {
    std::vector<std::uint8_t> mask(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        mask[t] = (p[t] > 0.5 || (t == 0 && first_forced)) ? 1 : 0;
    }
    return mask;
}

BoundaryDecision compute_boundaries(const Var& h, const RouterParams& params) {
    if (h.shape().empty() || h.value().empty()) {
        throw ContractError("router: empty sequence");
    }
    Tape& tape = h.tape();
    const std::size_t len = h.value().rows();
    BoundaryDecision out;
    if (len == 1) {
        out.sigma = tape.constant(Array::vector({-1.0}));
        out.p = tape.constant(Array::vector({1.0}));
    } else {
        const Var q = matmul(h, params.wq);
        const Var k = matmul(h, params.wk);
        std::vector<std::size_t> prev(len - 1);
        std::vector<std::size_t> next(len - 1);
        std::iota(prev.begin(), prev.end(), std::size_t{0});
        std::iota(next.begin(), next.end(), std::size_t{1});
        const Var sigma = rowwise_cosine(gather_rows(q, prev), gather_rows(k, next));
        const Var p = clip(0.5 * (1.0 - sigma), 0.0, 1.0);
        out.sigma = concat_rows({tape.constant(Array::vector({-1.0})), sigma});
        out.p = concat_rows({tape.constant(Array::vector({1.0})), p});
    }
    out.first_forced = true;
    out.mask = threshold_mask(out.p.value(), true);
    return out;
}

BoundaryDecision all_boundaries(Tape& tape, std::size_t length) {
    if (length == 0) {
        throw ContractError("router: empty sequence");
    }
    BoundaryDecision out;
    out.sigma = tape.constant(Array({length}, -1.0));
    out.p = tape.constant(Array({length}, 1.0));
    out.mask.assign(length, 1);
    return out;
}

BoundaryDecision fixed_boundaries(Tape& tape, Array p, std::vector<std::uint8_t> mask) {
    if (p.size() != mask.size() || mask.empty()) {
        throw DimensionError("fixed routing: p and mask lengths differ or are empty");
    }
    if (mask.front() != 1) {
        throw ContractError("fixed routing: position 0 must be a boundary");
    }
    Array sigma(p.shape());
    for (std::size_t t = 0; t < p.size(); ++t) {
        sigma[t] = 1.0 - 2.0 * p[t];
    }
    BoundaryDecision out;
    out.sigma = tape.constant(std::move(sigma));
    out.p = tape.constant(std::move(p));
    out.mask = std::move(mask);
    return out;
}

namespace {

Array mask_array(const BoundaryDecision& d) {
    Array b({d.mask.size()});
    for (std::size_t t = 0; t < d.mask.size(); ++t) {
        b[t] = d.mask[t];
    }
    return b;
}

}  // namespace

Var ste_mask(const BoundaryDecision& decision) { return straight_through(decision.p, mask_array(decision)); }

Var gate_values(const BoundaryDecision& decision, GateMode mode) {
    if (mode == GateMode::kStraightThrough) {
        return ste_mask(decision);
    }
    // c_t = b_t p_t + (1 - b_t)(1 - p_t) = (1 - b_t) + (2 b_t - 1) p_t
    const Array b = mask_array(decision);
    Array offset(b.shape());
    Array slope(b.shape());
    for (std::size_t t = 0; t < b.size(); ++t) {
        offset[t] = 1.0 - b[t];
        slope[t] = 2.0 * b[t] - 1.0;
    }
    Tape& tape = decision.p.tape();
    return tape.constant(std::move(offset)) + tape.constant(std::move(slope)) * decision.p;
}

}  // namespace hchunk
