// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hchunk/data.hpp"
#include "hchunk/model.hpp"
#include "hchunk/ndtensor/array.hpp"

namespace hchunk {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to continue a run bit-exactly.
struct Checkpoint {
    std::string config_json;
    std::uint64_t step = 0;  // steps completed
    std::vector<Parameter> params;
    std::uint64_t optimizer_steps = 0;
    std::vector<Array> first_moments;
    std::vector<Array> second_moments;
    std::vector<double> loss_history;
    std::vector<double> last_n_curr;
    BatchStreamState stream;

    bool operator==(const Checkpoint&) const;
};

/// Binary container: magic, version, then length-prefixed fields with
/// little-endian integers and IEEE-754 doubles stored verbatim.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws DataError on a missing, truncated or foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hchunk
