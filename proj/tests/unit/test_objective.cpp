// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gradcheck.hpp"
#include "hchunk/error.hpp"
#include "hchunk/ndtensor/ops.hpp"
#include "hchunk/objective.hpp"

using namespace hchunk;
using hchunk::testing::check_gradients;
using hchunk::testing::random_array;

TEST_CASE("balancing loss examples", "[objective]") {
    CHECK(balancing_loss(1.0 / 6.0, 1.0 / 6.0, 6.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(balancing_loss(1.0, 1.0, 6.0) == Catch::Approx(6.0).epsilon(1e-14));
    CHECK(balancing_loss(0.0, 0.0, 6.0) == Catch::Approx(1.2).epsilon(1e-14));
    CHECK_THROWS_AS(balancing_loss(0.5, 0.5, 1.0), DomainError);
    CHECK_THROWS_AS(balancing_loss(0.5, 0.5, 0.5), DomainError);
}

TEST_CASE("symmetric grid minimum sits at the target fraction", "[objective][property]") {
    for (double n : {1.5, 2.0, 3.0, 5.0, 6.0, 6.5, 9.0, 20.0}) {
        double best = 1e300;
        double arg = -1.0;
        for (int i = 1; i < 10000; ++i) {
            const double y = i * 1e-4;
            const double v = balancing_loss(y, y, n);
            if (v < best) {
                best = v;
                arg = y;
            }
        }
        INFO("N = " << n);
        CHECK(std::abs(arg - 1.0 / n) <= 1e-4);
        // The grid point nearest 1/N lies at most 5e-5 away, so the grid value is 1 + N^2 d^2 / (N - 1) >= 1.
        CHECK(best >= 1.0 - 1e-9);
        CHECK(best <= 1.0 + n * n * 2.5e-9 / (n - 1.0) + 1e-12);
        const auto opt = balancing_optimum(n);
        CHECK(opt.y == 1.0 / n);
        CHECK(std::abs(opt.value - 1.0) <= 1e-9);
    }
}

TEST_CASE("slope on the probability term", "[objective]") {
    for (double n : {2.0, 6.0, 9.0}) {
        CHECK(balancing_loss_slope(1.0 / n, n) == Catch::Approx(0.0).margin(1e-12));
        CHECK(balancing_loss_slope(1.0 / n + 0.01, n) > 0.0);
        CHECK(balancing_loss_slope(1.0 / n - 0.01, n) < 0.0);
        for (double y : {0.05, 0.3, 0.7}) {
            const double h = 1e-6;
            const double fd = (balancing_loss(y, 0.4 + h, n) - balancing_loss(y, 0.4 - h, n)) / (2.0 * h);
            CHECK(balancing_loss_slope(y, n) == Catch::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("differentiable balancing loss", "[objective][gradcheck]") {
    std::mt19937_64 rng(31);
    for (double n : {2.0, 6.0, 9.0}) {
        const double y = 0.25;
        auto f = [&](Tape&, const std::vector<Var>& in) { return balancing_loss(in[0], y, n); };
        const std::vector<Array> inputs{random_array({8}, rng, 0.0, 1.0)};
        const auto result = check_gradients(f, inputs);
        INFO(result.detail);
        REQUIRE(result.ok);

        Tape tape;
        auto p = tape.variable(inputs[0]);
        auto loss = balancing_loss(p, y, n);
        double mean_p = 0.0;
        for (double v : inputs[0].data()) {
            mean_p += v / 8.0;
        }
        CHECK(loss.value().item() == Catch::Approx(balancing_loss(y, mean_p, n)).epsilon(1e-13));
        tape.backward(loss);
        const double expected = balancing_loss_slope(y, n) / 8.0;
        for (double g : p.grad().data()) {
            CHECK(g == Catch::Approx(expected).epsilon(1e-13));
        }
    }
}

TEST_CASE("telemetry from a decision", "[objective]") {
    Tape tape;
    BoundaryDecision d;
    d.p = tape.constant(Array::vector({1.0, 0.2, 0.7, 0.1}));
    d.sigma = tape.constant(Array::vector({-1.0, 0.6, -0.4, 0.8}));
    d.mask = {1, 0, 1, 0};
    auto tel = RouterTelemetry::from_decision(d);
    CHECK(tel.y == 0.5);
    CHECK(tel.y_prob == Catch::Approx(0.5));
    CHECK(tel.chunks == 2);
    CHECK(tel.length == 4);
}

TEST_CASE("total loss", "[objective]") {
    Tape tape;
    auto logits = tape.constant(Array({4, 256}, 0.0));
    const std::vector<std::uint8_t> targets{1, 2, 3, 4};
    const double ce = std::log(256.0);

    RoutedStage stage;
    stage.p = tape.constant(Array::vector({1.0, 0.0, 0.0, 0.0}));
    stage.telemetry.y = 0.25;
    stage.telemetry.y_prob = 0.25;
    stage.telemetry.length = 4;
    stage.telemetry.chunks = 1;
    const std::vector<RoutedStage> stages{stage};
    const std::vector<double> n{4.0};

    auto plain = total_loss(logits, targets, stages, n, 0.0);
    CHECK(plain.total.value().item() == plain.cross_entropy);
    CHECK(plain.cross_entropy == Catch::Approx(ce).epsilon(1e-14));

    auto weighted = total_loss(logits, targets, stages, n, 0.03);
    CHECK(weighted.balancing == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(weighted.total.value().item() == Catch::Approx(ce + 0.03).epsilon(1e-14));

    CHECK_THROWS_AS(total_loss(logits, targets, stages, n, -0.1), DomainError);
    CHECK_THROWS_AS(total_loss(logits, targets, stages, std::vector<double>{}, 0.03), DimensionError);
}
