// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hchunk/ndtensor/array.hpp"
#include "hchunk/ndtensor/tape.hpp"

namespace hchunk {

// Elementwise arithmetic. Operands must have identical shapes.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

// Scalar arithmetic.
Var operator*(double s, const Var& a);
Var operator*(const Var& a, double s);
Var operator+(const Var& a, double s);
Var operator+(double s, const Var& a);
Var operator-(double s, const Var& a);
Var operator-(const Var& a, double s);

Var exp(const Var& a);
Var log(const Var& a);
/// Clamps to [lo, hi]. The gradient passes where lo <= a <= hi.
Var clip(const Var& a, double lo, double hi);

Var sum(const Var& a);
Var mean(const Var& a);
Var reshape(const Var& a, Shape shape);

/// [m x k] x [k x n] -> [m x n].
Var matmul(const Var& a, const Var& b);

/// Rows of `a` at `indices` (repeats allowed). Backward scatter-adds.
Var gather_rows(const Var& a, std::span<const std::size_t> indices);
/// Stacks along the first axis; trailing extents must agree.
Var concat_rows(const std::vector<Var>& parts);

/// x[L x d] scaled row-wise by s[L].
Var row_scale(const Var& x, const Var& s);

/// Per-row cosine <a_i, b_i> / (|a_i| |b_i| + eps), clamped to [-1, 1].
Var rowwise_cosine(const Var& a, const Var& b, double eps = 1e-8);

/// y_t = p_t c_t + (1 - p_t) y_{t-1}, y_0 = y0. p: [L], c: [L x d], y0: [d].
/// Throws DomainError when any p_t lies outside [0, 1].
Var ema_scan(const Var& p, const Var& c, const Var& y0);

/// Plain evaluators of the same recurrence. The associative one composes the
/// affine steps y -> (1 - p_t) y + p_t c_t with a log-depth inclusive scan.
Array ema_scan_sequential(const Array& p, const Array& c, const Array& y0);
Array ema_scan_associative(const Array& p, const Array& c, const Array& y0);

/// Forward value `forward`, backward identity into `x` (straight-through).
Var straight_through(const Var& x, Array forward);

}  // namespace hchunk
