// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/evaluate.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "hchunk/error.hpp"
#include "hchunk/metrics.hpp"
#include "hchunk/ndtensor/nn.hpp"
#include "hchunk/ndtensor/ops.hpp"

namespace hchunk {

EvalReport evaluate(const Model& model, std::span<const std::uint8_t> bytes, std::size_t context, GateMode gate) {
    const auto windows = evaluation_windows(bytes, context);
    if (windows.empty()) {
        throw DataError("evaluation text needs at least two bytes");
    }
    const std::size_t stages = model.config().stages.size();
    std::vector<std::size_t> length(stages, 0), chunks(stages, 0);
    std::vector<double> mass(stages, 0.0);
    double ce_sum = 0.0;
    std::size_t inputs = 0;
    EvalReport report;
    ForwardOptions options;
    options.track_gradients = false;
    options.gate = gate;
    for (const auto& w : windows) {
        const std::span<const std::uint8_t> all(w);
        const auto in = all.first(w.size() - 1);
        Tape tape;
        auto out = model.forward(tape, in, options);
        const double ce = softmax_cross_entropy(out.logits, all.subspan(1)).value().item();
        ce_sum += ce * static_cast<double>(in.size());
        inputs += in.size();
        for (std::size_t s = 0; s < stages; ++s) {
            const auto& tel = out.stages[s].telemetry;
            length[s] += tel.length;
            chunks[s] += tel.chunks;
            mass[s] += tel.y_prob * static_cast<double>(tel.length);
        }
    }
    report.windows = windows.size();
    report.bytes_scored = inputs;
    report.ce = ce_sum / static_cast<double>(inputs);
    report.bpb = bpb_from_byte_ce(report.ce);
    for (std::size_t s = 0; s < stages; ++s) {
        report.bpic.push_back(bpic(inputs, chunks[s]));
        report.y.push_back(static_cast<double>(chunks[s]) / static_cast<double>(length[s]));
        report.y_prob.push_back(mass[s] / static_cast<double>(length[s]));
    }
    report.compression = report.bpic.back();
    return report;
}

PerturbationReport perturbation_eval(const Model& model, std::string_view text, std::size_t context,
                                     std::uint64_t seed, GateMode gate) {
    auto as_bytes = [](std::string_view s) {
        return std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
    };
    PerturbationReport out;
    out.clean = evaluate(model, as_bytes(text), context, gate);
    for (PerturbationKind kind : kAllPerturbations) {
        const auto spec = PerturbationSpec::with_default_rate(kind, seed);
        const std::string noisy = perturb(text, spec);
        PerturbationResult r{kind, spec.rate, evaluate(model, as_bytes(noisy), context, gate), 0.0};
        r.delta_bpb = r.report.bpb - out.clean.bpb;
        out.perturbed.push_back(std::move(r));
    }
    return out;
}

namespace {

nlohmann::json report_json(const EvalReport& r) {
    return {{"windows", r.windows}, {"bytes_scored", r.bytes_scored}, {"ce", r.ce},          {"bpb", r.bpb},
            {"bpic", r.bpic},       {"y", r.y},                       {"y_prob", r.y_prob}, {"compression", r.compression}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(2); }

std::string report_to_json(const PerturbationReport& report) {
    nlohmann::json j;
    j["clean"] = report_json(report.clean);
    nlohmann::json kinds = nlohmann::json::array();
    for (const auto& r : report.perturbed) {
        nlohmann::json k = report_json(r.report);
        k["kind"] = to_string(r.kind);
        k["rate"] = r.rate;
        k["delta_bpb"] = r.delta_bpb;
        kinds.push_back(k);
    }
    j["perturbed"] = kinds;
    return j.dump(2);
}

ChunkAssignment assign_chunks(const Model& model, std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) {
        throw ContractError("assign_chunks: empty text");
    }
    ChunkAssignment out;
    const std::size_t window = model.config().max_seq_len;
    std::size_t next_chunk = 0;
    ForwardOptions options;
    options.track_gradients = false;
    for (std::size_t start = 0; start < bytes.size(); start += window) {
        const auto piece = bytes.subspan(start, std::min(window, bytes.size() - start));
        Tape tape;
        auto result = model.forward(tape, piece, options);
        const auto& tel = result.stages.front().telemetry;
        for (std::size_t t = 0; t < piece.size(); ++t) {
            if (tel.mask[t] != 0 && !(start == 0 && t == 0)) {
                ++next_chunk;
            }
            out.p.push_back(tel.p[t]);
            out.mask.push_back(tel.mask[t]);
            out.chunk.push_back(next_chunk);
        }
    }
    return out;
}

ChunkFormat parse_chunk_format(const std::string& name) {
    if (name == "text") {
        return ChunkFormat::kText;
    }
    if (name == "tsv") {
        return ChunkFormat::kTsv;
    }
    if (name == "svg") {
        return ChunkFormat::kSvg;
    }
    throw DomainError("unknown chunk format '" + name + "' (expected text, tsv or svg)");
}

namespace {

char printable(std::uint8_t b) {
    if (b == '\n' || b == '\t' || b == '\r') {
        return ' ';
    }
    return (b >= 0x20 && b < 0x7f) ? static_cast<char>(b) : '.';
}

std::string fixed(double v, int digits) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return std::string(buf, res.ptr);
}

std::string xml_escape(char c) {
    switch (c) {
        case '&': return "&amp;";
        case '<': return "&lt;";
        case '>': return "&gt;";
        case '"': return "&quot;";
        default: return std::string(1, c);
    }
}

constexpr const char* kPalette[] = {"#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462"};

}  // namespace

std::string render_chunks(const ChunkAssignment& chunks, std::span<const std::uint8_t> bytes, ChunkFormat format) {
    if (chunks.chunk.size() != bytes.size()) {
        throw DimensionError("render_chunks: assignment and text lengths differ");
    }
    std::ostringstream os;
    switch (format) {
        case ChunkFormat::kText: {
            constexpr std::size_t width = 64;
            for (std::size_t start = 0; start < bytes.size(); start += width) {
                const std::size_t end = std::min(bytes.size(), start + width);
                std::string text_row, id_row;
                for (std::size_t i = start; i < end; ++i) {
                    text_row.push_back(printable(bytes[i]));
                    id_row.push_back(static_cast<char>('0' + chunks.chunk[i] % 10));
                }
                if (start > 0) {
                    os << '\n';
                }
                os << text_row << '\n' << id_row << '\n';
            }
            break;
        }
        case ChunkFormat::kTsv:
            os << "index\tbyte\tchar\tp\tboundary\tchunk\n";
            for (std::size_t i = 0; i < bytes.size(); ++i) {
                os << i << '\t' << static_cast<int>(bytes[i]) << '\t' << printable(bytes[i]) << '\t'
                   << fixed(chunks.p[i], 6) << '\t' << static_cast<int>(chunks.mask[i]) << '\t' << chunks.chunk[i]
                   << '\n';
            }
            break;
        case ChunkFormat::kSvg: {
            constexpr std::size_t per_line = 64;
            constexpr int cell = 12;
            constexpr int line_height = 34;
            const std::size_t lines = (bytes.size() + per_line - 1) / per_line;
            const std::size_t cols = std::min(bytes.size(), per_line);
            os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * cell + 8 << "\" height=\""
               << lines * line_height + 8 << "\" font-family=\"monospace\" font-size=\"11\">\n";
            for (std::size_t i = 0; i < bytes.size(); ++i) {
                const std::size_t x = 4 + (i % per_line) * cell;
                const std::size_t y = 4 + (i / per_line) * line_height;
                os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"16\" fill=\""
                   << kPalette[chunks.chunk[i] % std::size(kPalette)] << "\"/>";
                const int bar = static_cast<int>(std::lround(chunks.p[i] * 10.0));
                os << "<rect x=\"" << x << "\" y=\"" << y + 18 + (10 - bar) << "\" width=\"" << cell - 2
                   << "\" height=\"" << bar << "\" fill=\"#444\"/>";
                os << "<text x=\"" << x + 2 << "\" y=\"" << y + 12 << "\">" << xml_escape(printable(bytes[i]))
                   << "</text>\n";
            }
            os << "</svg>\n";
            break;
        }
    }
    return os.str();
}

}  // namespace hchunk
