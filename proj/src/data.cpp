// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <random>

#include "hchunk/error.hpp"

namespace hchunk {

namespace {

// Length of the well-formed sequence starting at s[i], or 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) { return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80; };
    if (b0 < 0x80) {
        return 1;
    }
    if (b0 >= 0xC2 && b0 <= 0xDF) {
        return cont(1) ? 2 : 0;
    }
    if (b0 >= 0xE0 && b0 <= 0xEF) {
        if (!cont(1) || !cont(2)) {
            return 0;
        }
        const auto b1 = static_cast<unsigned char>(s[i + 1]);
        if ((b0 == 0xE0 && b1 < 0xA0) || (b0 == 0xED && b1 > 0x9F)) {
            return 0;  // overlong or surrogate
        }
        return 3;
    }
    if (b0 >= 0xF0 && b0 <= 0xF4) {
        if (!cont(1) || !cont(2) || !cont(3)) {
            return 0;
        }
        const auto b1 = static_cast<unsigned char>(s[i + 1]);
        if ((b0 == 0xF0 && b1 < 0x90) || (b0 == 0xF4 && b1 > 0x8F)) {
            return 0;
        }
        return 4;
    }
    return 0;
}

}  // namespace

bool is_valid_utf8(std::string_view text) {
    for (std::size_t i = 0; i < text.size();) {
        const std::size_t n = utf8_sequence_length(text, i);
        if (n == 0) {
            return false;
        }
        i += n;
    }
    return true;
}

std::vector<std::string_view> utf8_units(std::string_view text) {
    std::vector<std::string_view> out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        const std::size_t n = std::max<std::size_t>(1, utf8_sequence_length(text, i));
        out.push_back(text.substr(i, n));
        i += n;
    }
    return out;
}

std::string to_string(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::kAntspeak: return "antspeak";
        case PerturbationKind::kDrop: return "drop";
        case PerturbationKind::kRandomCase: return "randomcase";
        case PerturbationKind::kRepeat: return "repeat";
        case PerturbationKind::kUppercase: return "uppercase";
    }
    return "unknown";
}

PerturbationKind parse_perturbation_kind(std::string_view name) {
    for (PerturbationKind k : kAllPerturbations) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw DomainError("unknown perturbation kind '" + std::string(name) + "'");
}

double default_rate(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::kDrop:
        case PerturbationKind::kRepeat: return 0.1;
        case PerturbationKind::kRandomCase: return 0.5;
        default: return 0.0;
    }
}

PerturbationSpec PerturbationSpec::with_default_rate(PerturbationKind kind, std::uint64_t seed) {
    return {kind, default_rate(kind), seed};
}

namespace {

char ascii_upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

bool is_ascii_lower(std::string_view unit) { return unit.size() == 1 && unit[0] >= 'a' && unit[0] <= 'z'; }

}  // namespace

std::string perturb(std::string_view text, const PerturbationSpec& spec) {
    if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
        throw DomainError("perturbation rate must lie in [0, 1]");
    }
    std::mt19937_64 rng(spec.seed);
    // 53 random bits mapped to [0, 1); a draw below `rate` fires, so rate 1 always does.
    auto fires = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < spec.rate; };
    std::string out;
    out.reserve(text.size() * 2);
    const auto units = utf8_units(text);
    switch (spec.kind) {
        case PerturbationKind::kUppercase:
            for (char c : text) {
                out.push_back(ascii_upper(c));
            }
            break;
        case PerturbationKind::kAntspeak:
            for (std::size_t i = 0; i < units.size(); ++i) {
                if (i > 0) {
                    out.push_back(' ');
                }
                out.append(units[i]);
            }
            break;
        case PerturbationKind::kDrop:
            for (auto u : units) {
                if (!fires()) {
                    out.append(u);
                }
            }
            break;
        case PerturbationKind::kRepeat:
            for (auto u : units) {
                out.append(u);
                if (fires()) {
                    out.append(u);
                }
            }
            break;
        case PerturbationKind::kRandomCase:
            for (auto u : units) {
                if (is_ascii_lower(u) && fires()) {
                    out.push_back(ascii_upper(u[0]));
                } else {
                    out.append(u);
                }
            }
            break;
    }
    return out;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, std::uint8_t separator) {
    namespace fs = std::filesystem;
    Corpus corpus;
    std::error_code ec;
    if (fs::is_directory(path, ec)) {
        for (const auto& entry : fs::recursive_directory_iterator(path, ec)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") {
                corpus.files.push_back(entry.path());
            }
        }
        if (ec) {
            throw DataError("cannot list " + path.string() + ": " + ec.message());
        }
        std::sort(corpus.files.begin(), corpus.files.end());
    } else if (fs::is_regular_file(path, ec)) {
        corpus.files.push_back(path);
    } else {
        throw DataError("corpus path " + path.string() + " is neither a file nor a directory");
    }
    for (const auto& file : corpus.files) {
        auto bytes = read_file(file);
        if (bytes.empty()) {
            continue;
        }
        if (corpus.documents > 0) {
            corpus.bytes.push_back(separator);
        }
        corpus.bytes.insert(corpus.bytes.end(), bytes.begin(), bytes.end());
        ++corpus.documents;
    }
    if (corpus.bytes.empty()) {
        throw DataError("corpus at " + path.string() + " is empty");
    }
    return corpus;
}

std::size_t window_count(std::size_t corpus_bytes, std::size_t context) {
    if (context == 0) {
        throw DomainError("context must be positive");
    }
    return corpus_bytes < 1 ? 0 : (corpus_bytes - 1) / context;
}

BatchStream::BatchStream(std::shared_ptr<const std::vector<std::uint8_t>> corpus, std::size_t context,
                         std::size_t batch_size, std::uint64_t seed)
    : corpus_(std::move(corpus)), context_(context), batch_size_(batch_size) {
    if (!corpus_ || batch_size_ == 0) {
        throw DomainError("batch stream needs a corpus and a positive batch size");
    }
    windows_ = window_count(corpus_->size(), context_);
    if (windows_ == 0) {
        throw DataError("context of " + std::to_string(context_) + " bytes is longer than the corpus (" +
                        std::to_string(corpus_->size()) + " bytes)");
    }
    batches_per_epoch_ = windows_ / batch_size_;
    if (batches_per_epoch_ == 0) {
        throw DataError("corpus holds " + std::to_string(windows_) + " windows, fewer than one batch of " +
                        std::to_string(batch_size_));
    }
    state_.seed = seed;
    shuffle_epoch();
}

void BatchStream::shuffle_epoch() {
    order_.resize(windows_);
    for (std::size_t i = 0; i < windows_; ++i) {
        order_[i] = i;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(state_.seed), static_cast<std::uint32_t>(state_.seed >> 32),
                      static_cast<std::uint32_t>(state_.epoch), static_cast<std::uint32_t>(state_.epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(order_.begin(), order_.end(), rng);
}

Batch BatchStream::next() {
    if (state_.cursor == batches_per_epoch_) {
        ++state_.epoch;
        state_.cursor = 0;
        shuffle_epoch();
    }
    Batch batch;
    batch.size = batch_size_;
    batch.context = context_;
    batch.bytes.reserve(batch_size_ * (context_ + 1));
    for (std::size_t i = 0; i < batch_size_; ++i) {
        const std::size_t start = order_[state_.cursor * batch_size_ + i] * context_;
        batch.bytes.insert(batch.bytes.end(), corpus_->begin() + static_cast<std::ptrdiff_t>(start),
                           corpus_->begin() + static_cast<std::ptrdiff_t>(start + context_ + 1));
    }
    ++state_.cursor;
    return batch;
}

void BatchStream::restore(const BatchStreamState& state) {
    if (state.cursor > batches_per_epoch_) {
        throw DataError("batch stream state is past the end of its epoch");
    }
    const bool reshuffle = state.seed != state_.seed || state.epoch != state_.epoch;
    state_ = state;
    if (reshuffle) {
        shuffle_epoch();
    }
}

std::vector<std::vector<std::uint8_t>> evaluation_windows(std::span<const std::uint8_t> bytes, std::size_t context) {
    if (context == 0) {
        throw DomainError("context must be positive");
    }
    std::vector<std::vector<std::uint8_t>> out;
    for (std::size_t start = 0; start + 1 < bytes.size(); start += context) {
        const std::size_t end = std::min(bytes.size(), start + context + 1);
        out.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                         bytes.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace hchunk
