// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hchunk/error.hpp"
#include "hchunk/schedule.hpp"

using namespace hchunk;

namespace {

CompressionScheduleConfig desk(std::size_t total = 2000) {
    CompressionScheduleConfig c;
    c.total_steps = total;
    c.warmup_steps = total * 6 / 10;
    return c;
}

}  // namespace

TEST_CASE("scheduled targets at the phase points", "[schedule]") {
    const auto c = desk();
    CHECK(std::abs(n_scheduled(c, 0)[0] - 5.0) <= 1e-12);
    CHECK(std::abs(n_scheduled(c, 1199)[0] - 5.0) <= 1e-12);
    CHECK(std::abs(n_scheduled(c, 1200)[0] - 5.0) <= 1e-12);
    CHECK(std::abs(n_scheduled(c, 1600)[0] - 5.75) <= 1e-12);
    CHECK(std::abs(n_scheduled(c, 2000)[0] - 6.5) <= 1e-12);
    CHECK(n_scheduled(c, 5000)[0] == 6.5);
}

TEST_CASE("schedule configuration errors", "[schedule]") {
    auto c = desk();
    c.warmup_steps = c.total_steps;
    CHECK_THROWS_AS(n_scheduled(c, 0), DomainError);
    c = desk();
    c.n_init = {1.0};
    CHECK_THROWS_AS(CompressionSchedule(c), DomainError);
    c = desk();
    c.gamma = 0.9;
    CHECK_THROWS_AS(CompressionSchedule(c), DomainError);
    c = desk();
    c.window = 0;
    CHECK_THROWS_AS(CompressionSchedule(c), DomainError);
    c = desk();
    c.n_final = {6.5, 6.5};
    CHECK_THROWS_AS(CompressionSchedule(c), DomainError);
}

TEST_CASE("scheduled targets are monotone and flat before warm-up", "[schedule][property]") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        CompressionScheduleConfig c;
        c.total_steps = 10 + rng() % 500;
        c.warmup_steps = rng() % c.total_steps;
        c.n_init = {1.5 + (rng() % 100) / 10.0, 2.0};
        c.n_final = {c.n_init[0] + (rng() % 50) / 10.0, 3.0};
        double prev = 0.0;
        for (std::size_t t = 0; t <= c.total_steps; ++t) {
            const auto n = n_scheduled(c, t);
            if (t < c.warmup_steps) {
                REQUIRE(n == c.n_init);
            }
            REQUIRE(n[0] >= prev);
            prev = n[0];
        }
    }
}

TEST_CASE("trigger examples", "[schedule]") {
    CompressionSchedule sched(desk());
    for (int i = 0; i < 99; ++i) {
        sched.record_loss(0.0);
    }
    CHECK_FALSE(sched.triggered());
    CHECK(sched.current(1600) == sched.scheduled(1600));
    sched.record_loss(0.0);
    CHECK(sched.triggered());

    CompressionSchedule low(desk());
    for (int i = 0; i < 100; ++i) {
        low.record_loss(0.04);
    }
    CHECK(low.current(1600)[0] == 5.75 * 1.05);
    CHECK(low.current(1600)[0] == Catch::Approx(6.0375).epsilon(1e-15));

    CompressionSchedule high(desk());
    for (int i = 0; i < 100; ++i) {
        high.record_loss(0.06);
    }
    CHECK(high.current(1600)[0] == 5.75);
}

TEST_CASE("history keeps only the window", "[schedule]") {
    auto c = desk();
    c.window = 3;
    CompressionSchedule sched(c);
    for (double v : {9.0, 1.0, 2.0, 3.0}) {
        sched.record_loss(v);
    }
    CHECK(sched.history() == std::deque<double>{1.0, 2.0, 3.0});
    CHECK(sched.window_mean() == 2.0);
    sched.restore_history({4.0, 5.0, 6.0, 7.0});
    CHECK(sched.history() == std::deque<double>{5.0, 6.0, 7.0});
}

TEST_CASE("trigger replay on a synthetic trace", "[schedule][property]") {
    // Loss decays through tau with noise, so the window mean crosses it partway.
    const auto c = desk();
    std::mt19937_64 rng(42);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> trace(c.total_steps);
    for (std::size_t t = 0; t < trace.size(); ++t) {
        trace[t] = 0.2 * std::exp(-static_cast<double>(t) / 500.0) + noise(rng);
    }

    auto replay = [&] {
        CompressionSchedule sched(c);
        std::vector<double> n(trace.size());
        for (std::size_t t = 0; t < trace.size(); ++t) {
            n[t] = sched.current(t)[0];
            sched.record_loss(trace[t]);
        }
        return n;
    };
    const auto n = replay();
    CHECK(replay() == n);

    std::size_t boosted = 0;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        bool qualifies = false;
        if (t >= c.window) {
            double sum = 0.0;
            for (std::size_t i = t - c.window; i < t; ++i) {
                sum += trace[i];
            }
            qualifies = sum / static_cast<double>(c.window) < c.tau;
        }
        const double sched = n_scheduled(c, t)[0];
        REQUIRE(n[t] == (qualifies ? sched * c.gamma : sched));
        REQUIRE(n[t] >= sched);
        boosted += qualifies ? 1 : 0;
    }
    CHECK(boosted > 0);
    CHECK(boosted < trace.size() - c.window);
}

TEST_CASE("warmup-stable-decay learning rate", "[schedule][lr]") {
    LrScheduleConfig lr;
    lr.peak_lr = 1e-3;
    const std::size_t total = 2000;
    CHECK(lr_at(0, lr, total) == 0.0);
    CHECK(lr_at(100, lr, total) == Catch::Approx(5e-4).epsilon(1e-15));
    CHECK(lr_at(200, lr, total) == 1e-3);
    CHECK(lr_at(1000, lr, total) == 1e-3);
    CHECK(lr_at(1600, lr, total) == 1e-3);
    CHECK(lr_at(2000, lr, total) == Catch::Approx(1e-3 * std::sqrt(0.8)).epsilon(1e-15));
    CHECK(lr_at(1601, lr, total) == Catch::Approx(1e-3).epsilon(1e-3));
    CHECK(lr_at(199, lr, total) == Catch::Approx(1e-3).epsilon(1e-2));
    double prev = lr_at(1600, lr, total);
    for (std::size_t s = 1601; s <= total; ++s) {
        const double v = lr_at(s, lr, total);
        REQUIRE(v < prev);
        prev = v;
    }
    lr.warmup_fraction = 0.9;
    CHECK_THROWS_AS(lr_at(0, lr, total), DomainError);
}
