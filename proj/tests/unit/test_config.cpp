// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <fstream>

#include "hchunk/config.hpp"
#include "hchunk/error.hpp"
#include "tiny_run.hpp"

using namespace hchunk;

TEST_CASE("defaults survive a JSON round trip", "[config]") {
    const RunConfig c;
    CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("edited configs survive a JSON round trip", "[config]") {
    RunConfig c = testing::tiny_config("out/x");
    c.model.stages.push_back(StageConfig{16, 2, 1, 4, 1.5});
    c.model.main_width = 24;
    c.model.main_heads = 4;
    c.gate = GateMode::kStraightThrough;
    c.schedule.n_init = {3.0, 2.0};
    c.schedule.n_final = {3.5, 2.5};
    c.alpha = 0.125;
    c.optimizer.peak_lr = 3e-4;
    c.data.separator = 10;
    const RunConfig back = config_from_json(config_to_json(c));
    CHECK(back == c);
    CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("missing keys take defaults", "[config]") {
    const RunConfig c = config_from_json(R"({"seed": 11, "model": {"main_layers": 3}})");
    CHECK(c.seed == 11);
    CHECK(c.model.main_layers == 3);
    CHECK(c.alpha == RunConfig{}.alpha);
    CHECK(c.schedule == ScheduleSettings{});
}

TEST_CASE("unknown keys and wrong types are rejected", "[config]") {
    CHECK_THROWS_AS(config_from_json(R"({"sead": 1})"), DomainError);
    CHECK_THROWS_AS(config_from_json(R"({"model": {"widht": 1}})"), DomainError);
    CHECK_THROWS_AS(config_from_json(R"({"alpha": "big"})"), DomainError);
    CHECK_THROWS_AS(config_from_json(R"({"gate": "sometimes"})"), DomainError);
    CHECK_THROWS_AS(config_from_json("not json"), DomainError);
}

TEST_CASE("validation catches inconsistent settings", "[config]") {
    RunConfig c;
    c.validate();
    c.alpha = -1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = RunConfig{};
    c.schedule.n_final = {6.5, 2.0};
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = RunConfig{};
    c.schedule.n_init = {1.0};
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = RunConfig{};
    c.data.context = 1024;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = RunConfig{};
    c.data.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("gate names parse", "[config]") {
    CHECK(parse_gate_mode("confidence") == GateMode::kConfidence);
    CHECK(parse_gate_mode("straight_through") == GateMode::kStraightThrough);
    CHECK(to_string(GateMode::kStraightThrough) == "straight_through");
    CHECK_THROWS_AS(parse_gate_mode("ste!"), DomainError);
}

TEST_CASE("config files load from disk", "[config]") {
    const auto dir = testing::scratch_dir("config");
    {
        std::ofstream(dir / "c.json") << R"({"objective": {"alpha": 0.5}})";
    }
    CHECK(load_config(dir / "c.json").alpha == 0.5);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), DataError);
}
