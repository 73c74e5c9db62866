// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/optimizer.hpp"

#include <cmath>

#include "hchunk/error.hpp"

namespace hchunk {

AdamW::AdamW(const ParameterStore& params, OptimizerSettings settings) : settings_(settings) {
    for (const auto& p : params) {
        m_.emplace_back(p.value.shape(), 0.0);
        v_.emplace_back(p.value.shape(), 0.0);
        decay_.push_back(p.value.rank() == 2 && p.name != "embedding");
    }
}

void AdamW::step(ParameterStore& params, const std::vector<Array>& grads, double lr) {
    if (grads.size() != params.size() || m_.size() != params.size()) {
        throw ContractError("AdamW: gradient count does not match the parameters");
    }
    ++steps_;
    const double b1 = settings_.beta1;
    const double b2 = settings_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i].value.data();
        const auto g = grads[i].data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        if (g.size() != w.size()) {
            throw ContractError("AdamW: gradient shape mismatch for " + params[i].name);
        }
        const double shrink = decay_[i] ? 1.0 - lr * settings_.weight_decay : 1.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + settings_.eps);
            w[k] = w[k] * shrink - lr * update;
        }
    }
}

void AdamW::restore(std::uint64_t steps, std::vector<Array> m, std::vector<Array> v) {
    if (m.size() != m_.size() || v.size() != v_.size()) {
        throw ContractError("AdamW: restored moment count differs");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i].shape() != m_[i].shape() || v[i].shape() != v_[i].shape()) {
            throw ContractError("AdamW: restored moment shape differs");
        }
    }
    steps_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
}

double global_norm(const std::vector<Array>& grads) {
    double sq = 0.0;
    for (const auto& g : grads) {
        for (double x : g.data()) {
            sq += x * x;
        }
    }
    return std::sqrt(sq);
}

double clip_global_norm(std::vector<Array>& grads, double max_norm) {
    const double norm = global_norm(grads);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& g : grads) {
            for (double& x : g.data()) {
                x *= scale;
            }
        }
    }
    return norm;
}

}  // namespace hchunk
