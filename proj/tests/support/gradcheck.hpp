// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracle. Only forward values of freshly built
// tapes are used, so the check never shares code with the backward rules it
// verifies.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hchunk/ndtensor/array.hpp"
#include "hchunk/ndtensor/tape.hpp"

namespace hchunk::testing {

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckResult {
    bool ok = true;
    double worst_error = 0.0;  // |analytic - numeric| / (rtol * max(|a|, |n|) + atol), <= 1 passes
    std::string detail;
};

inline Array random_array(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Array out(shape);
    for (double& v : out.data()) {
        v = dist(rng);
    }
    return out;
}

inline double evaluate(const ScalarFn& f, const std::vector<Array>& inputs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Array& a : inputs) {
        vars.push_back(tape.constant(a));
    }
    return f(tape, vars).value().item();
}

/// Compares the tape gradient of f w.r.t. every input against central
/// differences with step h. An entry passes when
/// |analytic - numeric| <= rtol * max(|analytic|, |numeric|) + atol.
inline GradCheckResult check_gradients(const ScalarFn& f, const std::vector<Array>& inputs, double h = 1e-5,
                                       double rtol = 1e-4, double atol = 1e-8) {
    std::vector<Array> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        for (const Array& a : inputs) {
            vars.push_back(tape.variable(a));
        }
        Var out = f(tape, vars);
        tape.backward(out);
        for (const Var& v : vars) {
            analytic.push_back(tape.has_grad(v) ? tape.grad(v) : Array(v.shape(), 0.0));
        }
    }
    GradCheckResult result;
    std::vector<Array> probe = inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double base = inputs[k][i];
            probe[k][i] = base + h;
            const double up = evaluate(f, probe);
            probe[k][i] = base - h;
            const double down = evaluate(f, probe);
            probe[k][i] = base;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[k][i];
            const double err = std::abs(a - numeric) / (rtol * std::max(std::abs(a), std::abs(numeric)) + atol);
            if (err > result.worst_error) {
                result.worst_error = err;
                std::ostringstream os;
                os << "input " << k << " entry " << i << ": analytic " << a << " numeric " << numeric;
                result.detail = os.str();
            }
        }
    }
    result.ok = result.worst_error <= 1.0;
    return result;
}

}  // namespace hchunk::testing
