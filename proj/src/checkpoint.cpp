// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hchunk/error.hpp"

namespace hchunk {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'C', 'H', 'U', 'N', 'K', 'C', 'K'};

class Writer {
   public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void raw(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void doubles(std::span<const double> v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void array(const Array& a) {
        u64(a.rank());
        for (std::size_t d : a.shape()) {
            u64(d);
        }
        raw(a.data().data(), a.size() * sizeof(double));
    }

   private:
    std::ostream& out_;
};

class Reader {
   public:
    Reader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

    void raw(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw DataError("checkpoint " + origin_ + " is truncated");
        }
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        raw(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        raw(&v, sizeof v);
        return v;
    }
    std::uint64_t count(std::uint64_t limit) {
        const std::uint64_t n = u64();
        if (n > limit) {
            throw DataError("checkpoint " + origin_ + " holds an implausible length");
        }
        return n;
    }
    std::string str() {
        std::string s(count(1ULL << 32), '\0');
        raw(s.data(), s.size());
        return s;
    }
    std::vector<double> doubles() {
        std::vector<double> v(count(1ULL << 32));
        raw(v.data(), v.size() * sizeof(double));
        return v;
    }
    Array array() {
        const std::uint64_t rank = count(8);
        Shape shape(rank);
        std::uint64_t total = 1;
        for (auto& d : shape) {
            d = count(1ULL << 32);
            total *= d;
            if (d == 0 || total > (1ULL << 32)) {
                throw DataError("checkpoint " + origin_ + " holds an invalid tensor shape");
            }
        }
        Buffer data(total);
        raw(data.data(), total * sizeof(double));
        return Array(std::move(shape), std::move(data));
    }

   private:
    std::istream& in_;
    std::string origin_;
};

bool same_bits(const Array& a, const Array& b) {
    return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
    if (config_json != o.config_json || step != o.step || optimizer_steps != o.optimizer_steps ||
        stream != o.stream || params.size() != o.params.size() || first_moments.size() != o.first_moments.size() ||
        second_moments.size() != o.second_moments.size() || !same_bits(loss_history, o.loss_history) ||
        !same_bits(last_n_curr, o.last_n_curr)) {
        return false;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != o.params[i].name || !same_bits(params[i].value, o.params[i].value)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < first_moments.size(); ++i) {
        if (!same_bits(first_moments[i], o.first_moments[i]) || !same_bits(second_moments[i], o.second_moments[i])) {
            return false;
        }
    }
    return true;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    if (c.first_moments.size() != c.params.size() || c.second_moments.size() != c.params.size()) {
        throw ContractError("checkpoint moments do not match the parameters");
    }
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write checkpoint " + tmp.string());
        }
        Writer w(out);
        w.raw(kMagic, sizeof kMagic);
        w.u32(kCheckpointVersion);
        w.str(c.config_json);
        w.u64(c.step);
        w.u64(c.params.size());
        for (const auto& p : c.params) {
            w.str(p.name);
            w.array(p.value);
        }
        w.u64(c.optimizer_steps);
        for (std::size_t i = 0; i < c.params.size(); ++i) {
            w.array(c.first_moments[i]);
            w.array(c.second_moments[i]);
        }
        w.doubles(c.loss_history);
        w.doubles(c.last_n_curr);
        w.u64(c.stream.seed);
        w.u64(c.stream.epoch);
        w.u64(c.stream.cursor);
        out.flush();
        if (!out) {
            throw DataError("failed writing checkpoint " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read checkpoint " + path.string());
    }
    Reader r(in, path.string());
    char magic[sizeof kMagic];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError(path.string() + " is not a checkpoint");
    }
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw DataError("checkpoint version " + std::to_string(version) + " is not supported");
    }
    Checkpoint c;
    c.config_json = r.str();
    c.step = r.u64();
    const std::uint64_t n = r.count(1ULL << 20);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string name = r.str();
        c.params.push_back({std::move(name), r.array()});
    }
    c.optimizer_steps = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        c.first_moments.push_back(r.array());
        c.second_moments.push_back(r.array());
    }
    c.loss_history = r.doubles();
    c.last_n_curr = r.doubles();
    c.stream.seed = r.u64();
    c.stream.epoch = r.u64();
    c.stream.cursor = r.u64();
    if (in.peek() != std::char_traits<char>::eof()) {
        throw DataError("checkpoint " + path.string() + " has trailing bytes");
    }
    return c;
}

}  // namespace hchunk
