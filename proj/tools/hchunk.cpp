// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include "hchunk/config.hpp"
#include "hchunk/data.hpp"
#include "hchunk/error.hpp"
#include "hchunk/evaluate.hpp"
#include "hchunk/metrics.hpp"
#include "hchunk/schedule.hpp"
#include "hchunk/trainer.hpp"

namespace {

using namespace hchunk;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path);
    }
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << text;
}

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s += (i ? ";" : "") + shortest(xs[i]);
    }
    return s;
}

struct TrainArgs {
    std::string config;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::optional<double> alpha;
    std::optional<double> lr;
    std::optional<std::string> gate;
    std::optional<std::string> train_data;
    std::optional<std::string> resume;
    std::optional<std::size_t> stop_at;
    std::optional<double> fixed_n;
    std::size_t log_every = 50;
    bool print_config = false;
};

int run_train(const TrainArgs& a) {
    RunConfig c = a.config.empty() ? RunConfig{} : load_config(a.config);
    if (a.output) c.output_dir = *a.output;
    if (a.seed) c.seed = *a.seed;
    if (a.steps) c.schedule.total_steps = *a.steps;
    if (a.alpha) c.alpha = *a.alpha;
    if (a.lr) c.optimizer.peak_lr = *a.lr;
    if (a.gate) c.gate = parse_gate_mode(*a.gate);
    if (a.train_data) c.data.train = *a.train_data;
    if (a.fixed_n) {
        c.schedule.n_init.assign(c.model.stages.size(), *a.fixed_n);
        c.schedule.n_final = c.schedule.n_init;
        c.schedule.gamma = 1.0;
    }
    if (a.print_config) {
        c.validate();
        std::cout << config_to_json(c) << '\n';
        return kOk;
    }
    TrainOptions options;
    if (a.resume) options.resume = *a.resume;
    options.stop_at = a.stop_at;
    const std::size_t every = a.log_every;
    options.on_step = [every](const StepTelemetry& r) {
        if (every > 0 && r.step % every == 0) {
            std::fprintf(stderr, "step %5zu  ce %.4f  bpb %.4f  bpic %s  N %s  lr %.3g\n", r.step, r.ce, r.bpb,
                         join(r.bpic).c_str(), join(r.n_curr).c_str(), r.lr);
        }
    };
    try {
        const auto result = train(c, options);
        std::fprintf(stderr, "trained %zu steps; checkpoint %s\n", result.steps_completed,
                     result.checkpoint.string().c_str());
    } catch (const NonFiniteLoss& e) {
        std::fprintf(stderr, "error: %s; dump written to %s\n", e.what(),
                     (std::filesystem::path(c.output_dir) / "nan_dump.json").string().c_str());
        return kNumerical;
    }
    return kOk;
}

std::string heldout_text(const LoadedModel& m, const std::string& data) {
    const Corpus corpus = load_corpus(data.empty() ? m.config.data.heldout : data, m.config.data.separator);
    return std::string(corpus.bytes.begin(), corpus.bytes.end());
}

nlohmann::json run_header(const LoadedModel& m) {
    const auto sched = m.config.schedule.resolve();
    nlohmann::json j;
    j["step"] = m.step;
    j["n_curr"] = m.last_n_curr;
    bool bounded = true;
    for (std::size_t s = 0; s < m.last_n_curr.size(); ++s) {
        bounded = bounded && m.last_n_curr[s] <= sched.n_final[s] * sched.gamma * (1.0 + 1e-12);
    }
    j["n_curr_within_bound"] = bounded;
    return j;
}

int run_eval(const std::string& ckpt, const std::string& data, std::size_t context, const std::string& out) {
    const auto m = load_model(ckpt);
    const std::string text = heldout_text(m, data);
    const std::size_t ctx = context ? context : m.config.data.context;
    const auto report = evaluate(m.model, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                                 ctx, m.config.gate);
    nlohmann::json j = run_header(m);
    j["report"] = nlohmann::json::parse(report_to_json(report));
    write_output(out, j.dump(2) + "\n");
    return kOk;
}

int run_perturb_eval(const std::string& ckpt, const std::string& data, std::size_t context, std::uint64_t seed,
                     const std::string& out) {
    const auto m = load_model(ckpt);
    const std::string text = heldout_text(m, data);
    const std::size_t ctx = context ? context : m.config.data.context;
    const auto report = perturbation_eval(m.model, text, ctx, seed, m.config.gate);
    nlohmann::json j = run_header(m);
    j["report"] = nlohmann::json::parse(report_to_json(report));
    write_output(out, j.dump(2) + "\n");
    for (const auto& r : report.perturbed) {
        std::fprintf(stderr, "%-10s bpb %.4f  delta %+.4f\n", to_string(r.kind).c_str(), r.report.bpb, r.delta_bpb);
    }
    return kOk;
}

int run_perturb(const std::string& kind, std::optional<double> rate, std::uint64_t seed) {
    auto spec = PerturbationSpec::with_default_rate(parse_perturbation_kind(kind), seed);
    if (rate) {
        if (!(*rate >= 0.0 && *rate <= 1.0)) {
            throw DomainError("rate must lie in [0, 1]");
        }
        spec.rate = *rate;
    }
    const std::string in{std::istreambuf_iterator<char>(std::cin), {}};
    std::cout << perturb(in, spec);
    return kOk;
}

std::vector<double> read_losses(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.front() == '{') {
            out.push_back(from_json_line(line).ce);
            continue;
        }
        double v = 0.0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc{}) {
            throw DataError("unparsable loss '" + line + "' in " + path);
        }
        out.push_back(v);
    }
    return out;
}

int run_schedule(const std::string& config, std::optional<std::size_t> steps, const std::string& losses,
                 const std::string& out) {
    RunConfig c = config.empty() ? RunConfig{} : load_config(config);
    if (steps) c.schedule.total_steps = *steps;
    c.validate();
    CompressionSchedule sched(c.schedule.resolve());
    const std::vector<double> trace = losses.empty() ? std::vector<double>{} : read_losses(losses);
    const std::size_t total = c.schedule.total_steps;
    std::ostringstream os;
    os << "t,n_sched,n_curr,lr\n";
    for (std::size_t t = 0; t <= total; ++t) {
        os << t << ',' << join(sched.scheduled(t)) << ',' << join(sched.current(t)) << ','
           << shortest(lr_at(t, c.optimizer.lr_schedule(), total)) << '\n';
        if (t < trace.size()) {
            sched.record_loss(trace[t]);
        }
    }
    write_output(out, os.str());
    return kOk;
}

int run_chunks(const std::string& ckpt, const std::string& text, const std::string& file, const std::string& format,
               const std::string& out) {
    const ChunkFormat fmt = parse_chunk_format(format);
    if (text.empty() == file.empty()) {
        throw DomainError("give exactly one of --text or --file");
    }
    const std::string body = file.empty() ? text : read_file(file);
    if (body.empty()) {
        throw DataError("nothing to render");
    }
    const auto m = load_model(ckpt);
    const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size());
    write_output(out, render_chunks(assign_chunks(m.model, bytes), bytes, fmt));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"Hierarchical byte language model with adaptive chunking"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a model");
    train_cmd->add_option("-c,--config", ta.config, "JSON config file");
    train_cmd->add_option("-o,--output", ta.output, "Output directory");
    train_cmd->add_option("--seed", ta.seed);
    train_cmd->add_option("--steps", ta.steps, "Total steps T");
    train_cmd->add_option("--alpha", ta.alpha, "Balancing loss weight");
    train_cmd->add_option("--lr", ta.lr, "Peak learning rate");
    train_cmd->add_option("--gate", ta.gate, "confidence or straight_through");
    train_cmd->add_option("--train-data", ta.train_data, "Training corpus file or directory");
    train_cmd->add_option("--fixed-n", ta.fixed_n, "Hold the target ratio fixed (no schedule, no trigger)");
    train_cmd->add_option("--resume", ta.resume, "Checkpoint to continue from");
    train_cmd->add_option("--stop-at", ta.stop_at, "Stop after this many steps");
    train_cmd->add_option("--log-every", ta.log_every, "Progress line interval (0 = silent)");
    train_cmd->add_flag("--print-config", ta.print_config, "Print the resolved config and exit");

    std::string ckpt, data, out, format = "text", text, file, kind, losses, sched_config;
    std::size_t context = 0;
    std::uint64_t seed = 0;
    std::optional<double> rate;
    std::optional<std::size_t> sched_steps;

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on held-out text");
    eval_cmd->add_option("checkpoint", ckpt)->required();
    eval_cmd->add_option("-d,--data", data, "Corpus file or directory (default: config heldout)");
    eval_cmd->add_option("--context", context, "Window length (default: config)");
    eval_cmd->add_option("-o,--output", out, "Report path (default: stdout)");

    auto* perturb_cmd = app.add_subcommand("perturb", "Perturb stdin to stdout");
    perturb_cmd->add_option("-k,--kind", kind, "antspeak, drop, randomcase, repeat or uppercase")->required();
    perturb_cmd->add_option("-r,--rate", rate);
    perturb_cmd->add_option("-s,--seed", seed);

    auto* peval_cmd = app.add_subcommand("perturb-eval", "BPB under each perturbation");
    peval_cmd->add_option("checkpoint", ckpt)->required();
    peval_cmd->add_option("-d,--data", data);
    peval_cmd->add_option("--context", context);
    peval_cmd->add_option("-s,--seed", seed);
    peval_cmd->add_option("-o,--output", out);

    auto* sched_cmd = app.add_subcommand("schedule", "Print the (t, N_sched, N_curr, lr) table as CSV");
    sched_cmd->add_option("-c,--config", sched_config);
    sched_cmd->add_option("--steps", sched_steps);
    sched_cmd->add_option("--losses", losses, "Loss trace: one value per line or telemetry.jsonl");
    sched_cmd->add_option("-o,--output", out);

    auto* chunks_cmd = app.add_subcommand("chunks", "Render chunk boundaries");
    chunks_cmd->add_option("checkpoint", ckpt)->required();
    chunks_cmd->add_option("-t,--text", text);
    chunks_cmd->add_option("-f,--file", file);
    chunks_cmd->add_option("--format", format, "text, tsv or svg");
    chunks_cmd->add_option("-o,--output", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train_cmd) return run_train(ta);
        if (*eval_cmd) return run_eval(ckpt, data, context, out);
        if (*perturb_cmd) return run_perturb(kind, rate, seed);
        if (*peval_cmd) return run_perturb_eval(ckpt, data, context, seed, out);
        if (*sched_cmd) return run_schedule(sched_config, sched_steps, losses, out);
        if (*chunks_cmd) return run_chunks(ckpt, text, file, format, out);
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kNumerical;
    } catch (const std::logic_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kData;
    }
    return kUsage;
}
