// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hchunk {

// ---- UTF-8 -----------------------------------------------------------------

bool is_valid_utf8(std::string_view text);

/// Splits text into code-point units. Bytes that do not start a well-formed
/// sequence become single-byte units, so concatenating the units restores the input.
std::vector<std::string_view> utf8_units(std::string_view text);

// ---- Perturbations ---------------------------------------------------------

enum class PerturbationKind { kAntspeak, kDrop, kRandomCase, kRepeat, kUppercase };

inline constexpr PerturbationKind kAllPerturbations[] = {PerturbationKind::kAntspeak, PerturbationKind::kDrop,
                                                          PerturbationKind::kRandomCase, PerturbationKind::kRepeat,
                                                          PerturbationKind::kUppercase};

std::string to_string(PerturbationKind kind);
/// Throws DomainError for an unknown name.
PerturbationKind parse_perturbation_kind(std::string_view name);
/// 0.1 for drop and repeat, 0.5 for randomcase, unused otherwise.
double default_rate(PerturbationKind kind);

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::kUppercase;
    double rate = 0.1;
    std::uint64_t seed = 0;

    static PerturbationSpec with_default_rate(PerturbationKind kind, std::uint64_t seed = 0);
};

/// Character-level perturbation. Case mapping touches ASCII letters only.
/// Throws DomainError when the rate is outside [0, 1].
std::string perturb(std::string_view text, const PerturbationSpec& spec);

// ---- Corpus ----------------------------------------------------------------

struct Corpus {
    std::vector<std::uint8_t> bytes;
    std::size_t documents = 0;
    std::vector<std::filesystem::path> files;
};

/// Reads a single file, or every regular `.txt` file under a directory in
/// sorted path order, joined by `separator`. Throws DataError when nothing is
/// readable or the result is empty.
Corpus load_corpus(const std::filesystem::path& path, std::uint8_t separator = 0x00);

/// Windows of context + 1 bytes starting every `context` bytes, so each byte
/// after the first is a target exactly once.
std::size_t window_count(std::size_t corpus_bytes, std::size_t context);

struct Batch {
    std::size_t size = 0;
    std::size_t context = 0;
    std::vector<std::uint8_t> bytes;  // size x (context + 1)

    std::span<const std::uint8_t> window(std::size_t i) const {
        return std::span(bytes).subspan(i * (context + 1), context + 1);
    }
    std::span<const std::uint8_t> inputs(std::size_t i) const { return window(i).first(context); }
    std::span<const std::uint8_t> targets(std::size_t i) const { return window(i).subspan(1); }
};

struct BatchStreamState {
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;
    std::uint64_t cursor = 0;  // batches consumed within the epoch

    bool operator==(const BatchStreamState&) const = default;
};

/// Full batches of shuffled windows. Each epoch uses a fresh permutation
/// derived from (seed, epoch), so the stream is resumable from its state.
class BatchStream {
   public:
    /// Throws DataError when the corpus cannot fill one batch.
    BatchStream(std::shared_ptr<const std::vector<std::uint8_t>> corpus, std::size_t context, std::size_t batch_size,
                std::uint64_t seed);

    std::size_t batches_per_epoch() const noexcept { return batches_per_epoch_; }
    std::size_t windows() const noexcept { return windows_; }
    Batch next();

    BatchStreamState state() const noexcept { return state_; }
    void restore(const BatchStreamState& state);

   private:
    void shuffle_epoch();

    std::shared_ptr<const std::vector<std::uint8_t>> corpus_;
    std::size_t context_;
    std::size_t batch_size_;
    std::size_t windows_;
    std::size_t batches_per_epoch_;
    BatchStreamState state_;
    std::vector<std::size_t> order_;
};

/// In-order evaluation windows: every full window plus a trailing partial one
/// of at least two bytes.
std::vector<std::vector<std::uint8_t>> evaluation_windows(std::span<const std::uint8_t> bytes, std::size_t context);

}  // namespace hchunk
