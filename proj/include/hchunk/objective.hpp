// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hchunk/ndtensor/tape.hpp"
#include "hchunk/router.hpp"

namespace hchunk {

/// Boundary statistics of one routed stage.
///
/// y is the realised boundary fraction sum(b) / L (forced first boundary
/// included) and y_prob the mean boundary probability sum(p) / L.
struct RouterTelemetry {
    double y = 0.0;
    double y_prob = 0.0;
    std::vector<double> p;
    std::vector<std::uint8_t> mask;
    std::size_t chunks = 0;
    std::size_t length = 0;

    static RouterTelemetry from_decision(const BoundaryDecision& decision);
};

/// A stage's probability node together with its statistics.
struct RoutedStage {
    Var p;
    RouterTelemetry telemetry;
};

/// (N / (N - 1)) * ((N - 1) y y' + (1 - y)(1 - y')). Throws DomainError for N <= 1.
double balancing_loss(double y, double y_prob, double n);
double balancing_loss(const RouterTelemetry& tel, double n);

/// Differentiable form: y' = mean(p) carries the gradient, y is a statistic of
/// the discrete mask and enters as a constant.
Var balancing_loss(const Var& p, double y, double n);

/// dL/dy' = (N / (N - 1)) ((N - 1) y - (1 - y)); zero exactly at y = 1/N.
double balancing_loss_slope(double y, double n);

/// Minimiser of the loss restricted to y = y'.
///
/// With y = y' the loss is f(y) = (N / (N - 1)) ((N - 1) y^2 + (1 - y)^2),
/// f'(y) = (2N / (N - 1)) (N y - 1) vanishes at y = 1/N and
/// f(1/N) = (N / (N - 1)) ((N - 1) / N^2 + (N - 1)^2 / N^2) = 1 for every N > 1.
struct BalancingOptimum {
    double y = 0.0;
    double value = 0.0;
};
BalancingOptimum balancing_optimum(double n);

struct LossBreakdown {
    Var total;
    double cross_entropy = 0.0;  // nats per byte
    double balancing = 0.0;      // sum over stages, before alpha
};

/// CE(next byte) + alpha * sum_s balancing_loss(stage s, N_s).
LossBreakdown total_loss(const Var& logits, std::span<const std::uint8_t> targets,
                         std::span<const RoutedStage> stages, std::span<const double> n, double alpha);

}  // namespace hchunk
