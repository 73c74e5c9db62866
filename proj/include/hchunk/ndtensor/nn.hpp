// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "hchunk/ndtensor/tape.hpp"

namespace hchunk {

/// x / sqrt(mean(x^2) + eps) * gain, row-wise. x: [L x d], gain: [d].
Var rms_norm(const Var& x, const Var& gain, double eps = 1e-6);

/// Mean next-token cross-entropy in nats. logits: [L x V], targets: L ids < V.
Var softmax_cross_entropy(const Var& logits, std::span<const std::uint8_t> targets);

/// Rotary position mixing of each head's (2i, 2i+1) feature pairs; row r is
/// position r. x: [L x d], d divisible by 2 * heads.
Var rope(const Var& x, std::size_t heads, double base = 10000.0);

/// Causal multi-head scaled dot-product attention. q, k, v: [L x d].
Var causal_attention(const Var& q, const Var& k, const Var& v, std::size_t heads);

/// silu(a) * b elementwise.
Var silu_mul(const Var& a, const Var& b);

struct AttentionWeights {
    Var norm;  // [d]
    Var wq, wk, wv, wo;  // [d x d]
};

struct FeedForwardWeights {
    Var norm;  // [d]
    Var w_gate, w_up;  // [d x h]
    Var w_down;  // [h x d]
};

/// silu(x W_gate) * (x W_up) W_down.
Var swiglu(const Var& x, const Var& w_gate, const Var& w_up, const Var& w_down);

/// Pre-norm residual blocks: x + Attn(RMS(x)) and x + SwiGLU(RMS(x)).
Var attention_block(const Var& x, const AttentionWeights& w, std::size_t heads, double rope_base);
Var feed_forward_block(const Var& x, const FeedForwardWeights& w);

}  // namespace hchunk
