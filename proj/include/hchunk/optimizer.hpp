// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "hchunk/config.hpp"
#include "hchunk/model.hpp"
#include "hchunk/ndtensor/array.hpp"

namespace hchunk {

/// Adam with decoupled weight decay. Decay applies to matrices other than the
/// byte embedding; gains and the embedding are not decayed.
class AdamW {
   public:
    AdamW(const ParameterStore& params, OptimizerSettings settings);

    void step(ParameterStore& params, const std::vector<Array>& grads, double lr);

    std::uint64_t steps() const noexcept { return steps_; }
    const std::vector<Array>& first_moments() const noexcept { return m_; }
    const std::vector<Array>& second_moments() const noexcept { return v_; }
    const std::vector<bool>& decayed() const noexcept { return decay_; }
    /// Throws ContractError when the shapes do not match the parameters.
    void restore(std::uint64_t steps, std::vector<Array> m, std::vector<Array> v);

   private:
    OptimizerSettings settings_;
    std::uint64_t steps_ = 0;
    std::vector<Array> m_;
    std::vector<Array> v_;
    std::vector<bool> decay_;
};

/// Euclidean norm over every gradient entry.
double global_norm(const std::vector<Array>& grads);
/// Scales grads in place so the global norm is at most max_norm; returns the
/// norm before clipping. max_norm = 0 leaves grads untouched.
double clip_global_norm(std::vector<Array>& grads, double max_norm);

}  // namespace hchunk
