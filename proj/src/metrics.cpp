// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hchunk/error.hpp"

namespace hchunk {

bool Ratio::operator==(const Ratio& other) const noexcept {
    return static_cast<unsigned __int128>(num) * other.den == static_cast<unsigned __int128>(other.num) * den;
}

Ratio operator*(const Ratio& a, const Ratio& b) {
    const std::uint64_t g1 = std::gcd(a.num, b.den);
    const std::uint64_t g2 = std::gcd(b.num, a.den);
    const std::uint64_t n1 = g1 == 0 ? a.num : a.num / g1;
    const std::uint64_t d2 = g1 == 0 ? b.den : b.den / g1;
    const std::uint64_t n2 = g2 == 0 ? b.num : b.num / g2;
    const std::uint64_t d1 = g2 == 0 ? a.den : a.den / g2;
    return {n1 * n2, d1 * d2};
}

Ratio bpic_ratio(std::size_t bytes, std::size_t chunks) {
    if (chunks == 0) {
        throw ContractError("bpic: no chunks");
    }
    return {bytes, chunks};
}

double bpic(std::size_t bytes, std::size_t chunks) { return bpic_ratio(bytes, chunks).value(); }

double bpic(const ChunkSegmentation& seg) { return bpic(seg.length, seg.chunk_count()); }

Ratio boundary_fraction(const ChunkSegmentation& seg) { return bpic_ratio(seg.length, seg.chunk_count()).inverse(); }

double bpb_from_byte_ce(double ce_nats_per_byte) {
    if (!(ce_nats_per_byte >= 0.0)) {
        throw DomainError("cross-entropy must be non-negative");
    }
    return ce_nats_per_byte / std::numbers::ln2;
}

double bpb_from_token_ppl(double ppl, std::size_t token_length, std::size_t byte_length) {
    if (!(ppl >= 1.0)) {
        throw DomainError("perplexity must be >= 1");
    }
    if (byte_length == 0) {
        throw DomainError("byte length must be positive");
    }
    return std::log2(ppl) * static_cast<double>(token_length) / static_cast<double>(byte_length);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("spearman: series lengths differ");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double mean = 0.5 * static_cast<double>(n + 1);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (ra[i] - mean) * (rb[i] - mean);
        saa += (ra[i] - mean) * (ra[i] - mean);
        sbb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (saa == 0.0 || sbb == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sab / std::sqrt(saa * sbb);
}

namespace {

using nlohmann::json;

json to_json(const StepTelemetry& r) {
    return json{{"step", r.step},       {"ce", r.ce},
                {"bpb", r.bpb},         {"loss", r.loss},
                {"balancing", r.balancing}, {"lr", r.lr},
                {"grad_norm", r.grad_norm}, {"triggered", r.triggered},
                {"bpic", r.bpic},       {"y", r.y},
                {"y_prob", r.y_prob},   {"n_sched", r.n_sched},
                {"n_curr", r.n_curr}};
}

}  // namespace

std::string to_json_line(const StepTelemetry& record) { return to_json(record).dump(); }

StepTelemetry from_json_line(const std::string& line) {
    try {
        const json j = json::parse(line);
        StepTelemetry r;
        r.step = j.at("step").get<std::size_t>();
        r.ce = j.at("ce").get<double>();
        r.bpb = j.at("bpb").get<double>();
        r.loss = j.at("loss").get<double>();
        r.balancing = j.at("balancing").get<double>();
        r.lr = j.at("lr").get<double>();
        r.grad_norm = j.at("grad_norm").get<double>();
        r.triggered = j.at("triggered").get<bool>();
        r.bpic = j.at("bpic").get<std::vector<double>>();
        r.y = j.at("y").get<std::vector<double>>();
        r.y_prob = j.at("y_prob").get<std::vector<double>>();
        r.n_sched = j.at("n_sched").get<std::vector<double>>();
        r.n_curr = j.at("n_curr").get<std::vector<double>>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed telemetry record: ") + e.what());
    }
}

std::vector<StepTelemetry> read_jsonl(std::istream& in) {
    std::vector<StepTelemetry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(from_json_line(line));
        }
    }
    return out;
}

void write_jsonl(std::ostream& out, std::span<const StepTelemetry> records) {
    for (const auto& r : records) {
        out << to_json_line(r) << '\n';
    }
}

namespace {

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError("malformed number in telemetry csv: '" + s + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& s) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError("malformed step in telemetry csv: '" + s + "'");
    }
    return v;
}

const char* const kStageColumns[] = {"bpic", "y", "y_prob", "n_sched", "n_curr"};

std::vector<double>* stage_field(StepTelemetry& r, std::size_t k) {
    switch (k) {
        case 0: return &r.bpic;
        case 1: return &r.y;
        case 2: return &r.y_prob;
        case 3: return &r.n_sched;
        default: return &r.n_curr;
    }
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

}  // namespace

void write_csv(std::ostream& out, std::span<const StepTelemetry> records) {
    const std::size_t stages = records.empty() ? 0 : records.front().bpic.size();
    out << "step,ce,bpb,loss,balancing,lr,grad_norm,triggered";
    for (const char* name : kStageColumns) {
        for (std::size_t s = 0; s < stages; ++s) {
            out << ',' << name << '_' << s;
        }
    }
    out << '\n';
    for (const auto& r : records) {
        out << r.step << ',' << shortest(r.ce) << ',' << shortest(r.bpb) << ',' << shortest(r.loss) << ','
            << shortest(r.balancing) << ',' << shortest(r.lr) << ',' << shortest(r.grad_norm) << ','
            << (r.triggered ? 1 : 0);
        StepTelemetry copy = r;
        for (std::size_t k = 0; k < 5; ++k) {
            const auto* field = stage_field(copy, k);
            if (field->size() != stages) {
                throw DataError("telemetry records disagree on the number of stages");
            }
            for (double v : *field) {
                out << ',' << shortest(v);
            }
        }
        out << '\n';
    }
}

std::vector<StepTelemetry> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        return {};
    }
    const auto header = split(line);
    if (header.size() < 8 || (header.size() - 8) % 5 != 0) {
        throw DataError("unexpected telemetry csv header");
    }
    const std::size_t stages = (header.size() - 8) / 5;
    std::vector<StepTelemetry> out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw DataError("telemetry csv row has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        }
        StepTelemetry r;
        r.step = parse_count(cells[0]);
        r.ce = parse_double(cells[1]);
        r.bpb = parse_double(cells[2]);
        r.loss = parse_double(cells[3]);
        r.balancing = parse_double(cells[4]);
        r.lr = parse_double(cells[5]);
        r.grad_norm = parse_double(cells[6]);
        r.triggered = cells[7] == "1";
        for (std::size_t k = 0; k < 5; ++k) {
            auto* field = stage_field(r, k);
            for (std::size_t s = 0; s < stages; ++s) {
                field->push_back(parse_double(cells[8 + k * stages + s]));
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace hchunk
