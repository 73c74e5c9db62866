// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hchunk/error.hpp"
#include "hchunk/model.hpp"
#include "hchunk/ndtensor/nn.hpp"
#include "hchunk/ndtensor/ops.hpp"
#include "hchunk/objective.hpp"

using namespace hchunk;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(rng() & 0xff);
    }
    return out;
}

std::vector<std::uint8_t> text_bytes(const std::string& s) { return {s.begin(), s.end()}; }

ModelConfig small_config(std::size_t width = 16) {
    ModelConfig cfg;
    cfg.stages = {StageConfig{width, 1, 1, 2, 2.0}};
    cfg.main_layers = 1;
    cfg.max_seq_len = 256;
    return cfg;
}

bool all_finite(const Array& a) {
    for (double v : a.data()) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("toy parameter count matches a hand count", "[model]") {
    ModelConfig cfg;
    cfg.stages = {StageConfig{8, 1, 1, 2, 2.0}};
    cfg.main_layers = 1;
    Model model(cfg, 0);
    // embedding 256*8; three blocks of (8 + 4*64) + (8 + 3*8*16); encoder norm 8; router 2*64;
    // residual 64; main norm 8; out norm 8; head 8*256.
    const std::size_t block = (8 + 4 * 64) + (8 + 3 * 8 * 16);
    const std::size_t expected = 256 * 8 + 3 * block + 8 + 2 * 64 + 64 + 8 + 8 + 8 * 256;
    CHECK(expected == 6280);
    CHECK(model.parameter_count() == expected);
    CHECK(model.parameter_report() == Model(cfg, 0).parameter_report());
    CHECK(model.parameter_report().find("total 6280") != std::string::npos);
}

TEST_CASE("initialization", "[model]") {
    Model model(small_config(), 3);
    const auto& params = model.parameters();
    CHECK(params[params.index_of("stage0.router.wq")].value == Array::identity(16));
    CHECK(params[params.index_of("stage0.router.wk")].value == Array::identity(16));
    CHECK(params[params.index_of("stage0.residual")].value == Array({16, 16}, 0.0));
    CHECK(Model(small_config(), 3).parameters()[0].value == params[0].value);
    CHECK_FALSE(Model(small_config(), 4).parameters()[0].value == params[0].value);
}

TEST_CASE("forward shape and initial cross-entropy", "[model]") {
    Model model(small_config(32), 1);
    const auto x = text_bytes("The quick brown fox jumps over the lazy dog, and then it naps in the sun.");
    Tape tape;
    auto out = model.forward(tape, x);
    REQUIRE(out.logits.shape() == Shape{x.size(), 256});
    CHECK(all_finite(out.logits.value()));
    REQUIRE(out.stages.size() == 1);
    CHECK(out.stages[0].telemetry.length == x.size());
    CHECK(out.stages[0].telemetry.mask[0] == 1);

    const auto targets = std::span(x).subspan(1);
    const std::vector<std::size_t> rows = [&] {
        std::vector<std::size_t> r(x.size() - 1);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = i;
        }
        return r;
    }();
    auto ce = softmax_cross_entropy(gather_rows(out.logits, rows), targets).value().item();
    CHECK(std::abs(ce - std::log(256.0)) <= 0.5);
}

TEST_CASE("forced boundaries leave the main network uncompressed", "[model]") {
    auto cfg = small_config();
    cfg.force_boundaries = true;
    Model model(cfg, 2);
    const auto x = random_bytes(40, 5);
    Tape tape;
    auto out = model.forward(tape, x);
    CHECK(out.stages[0].telemetry.chunks == 40);
    CHECK(out.logits.shape() == Shape{40, 256});
    const std::vector<RouterTelemetry> tel{out.stages[0].telemetry};
    CHECK(innermost_compression(tel) == 1.0);
}

TEST_CASE("input contract", "[model]") {
    Model model(small_config(), 0);
    Tape tape;
    CHECK_THROWS_AS(model.forward(tape, std::vector<std::uint8_t>{}), ContractError);
    CHECK_THROWS_AS(model.forward(tape, random_bytes(257, 1)), DimensionError);
    auto bad = small_config();
    bad.stages[0].heads = 3;
    CHECK_THROWS_AS(Model(bad, 0), DomainError);
    bad = small_config();
    bad.stages.clear();
    CHECK_THROWS_AS(Model(bad, 0), DomainError);
}

TEST_CASE("innermost compression", "[model]") {
    RouterTelemetry outer;
    outer.length = 12;
    outer.chunks = 3;
    CHECK(innermost_compression(std::vector<RouterTelemetry>{outer}) == 4.0);

    RouterTelemetry a;
    a.length = 81;
    a.chunks = 27;
    RouterTelemetry b;
    b.length = 27;
    b.chunks = 9;
    CHECK(innermost_compression(std::vector<RouterTelemetry>{a, b}) == 9.0);
}

TEST_CASE("logits are causal under fixed routing", "[model][property]") {
    Model model(small_config(), 7);
    // A nonzero residual lets every byte reach its own row, not only chunk starts.
    auto& params = model.parameters();
    params[params.index_of("stage0.residual")].value = Array::identity(16);
    const auto x = random_bytes(48, 9);
    Tape tape;
    auto base = model.forward(tape, x, {.track_gradients = false});
    ForwardOptions fixed{.track_gradients = false};
    fixed.fixed_routing.push_back(FixedRouting{base.stages[0].p.value(), base.stages[0].telemetry.mask});

    for (std::size_t t : {0UL, 1UL, 17UL, 30UL, 47UL}) {
        auto y = x;
        y[t] = static_cast<std::uint8_t>(y[t] ^ 0x5a);
        Tape probe;
        auto out = model.forward(probe, y, fixed);
        const Array& a = base.logits.value();
        const Array& b = out.logits.value();
        for (std::size_t r = 0; r < t; ++r) {
            for (std::size_t c = 0; c < 256; ++c) {
                REQUIRE(a.at(r, c) == b.at(r, c));
            }
        }
        bool changed = false;
        for (std::size_t c = 0; c < 256; ++c) {
            changed = changed || a.at(t, c) != b.at(t, c);
        }
        CHECK(changed);
    }
}

TEST_CASE("forward and backward give finite gradients for every parameter", "[model]") {
    ModelConfig cfg;
    cfg.stages = {StageConfig{32, 2, 2, 4, 2.0}};
    cfg.main_layers = 2;
    Model model(cfg, 11);
    const auto x = random_bytes(65, 13);
    Tape tape;
    auto out = model.forward(tape, std::span(x).first(64));
    const std::vector<double> n{4.0};
    auto loss = total_loss(out.logits, std::span(x).subspan(1), out.stages, n, 0.03);
    tape.backward(loss.total);
    for (std::size_t i = 0; i < out.params.size(); ++i) {
        INFO(model.parameters()[i].name);
        REQUIRE(tape.has_grad(out.params[i]));
        CHECK(all_finite(out.params[i].grad()));
    }
}

TEST_CASE("two-stage forward and backward", "[model]") {
    ModelConfig cfg;
    cfg.stages = {StageConfig{16, 1, 1, 2, 2.0}, StageConfig{24, 1, 1, 2, 2.0}};
    cfg.main_layers = 1;
    cfg.main_width = 32;
    Model model(cfg, 17);
    CHECK(model.parameters().contains("stage0.proj_in"));
    CHECK(model.parameters().contains("stage1.proj_out"));
    const auto x = random_bytes(129, 19);
    Tape tape;
    auto out = model.forward(tape, std::span(x).first(128));
    REQUIRE(out.stages.size() == 2);
    CHECK(out.stages[1].telemetry.length == out.stages[0].telemetry.chunks);
    const std::vector<double> n{3.0, 3.0};
    auto loss = total_loss(out.logits, std::span(x).subspan(1), out.stages, n, 0.03);
    tape.backward(loss.total);
    for (std::size_t i = 0; i < out.params.size(); ++i) {
        INFO(model.parameters()[i].name);
        REQUIRE(tape.has_grad(out.params[i]));
        CHECK(all_finite(out.params[i].grad()));
    }
    const std::vector<RouterTelemetry> tel{out.stages[0].telemetry, out.stages[1].telemetry};
    const double ratio0 = double(tel[0].length) / double(tel[0].chunks);
    const double ratio1 = double(tel[1].length) / double(tel[1].chunks);
    CHECK(innermost_compression(tel) == Catch::Approx(ratio0 * ratio1).epsilon(1e-15));
}
