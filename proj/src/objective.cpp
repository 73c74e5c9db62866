// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/objective.hpp"

#include <string>

#include "hchunk/error.hpp"
#include "hchunk/ndtensor/nn.hpp"
#include "hchunk/ndtensor/ops.hpp"

namespace hchunk {

RouterTelemetry RouterTelemetry::from_decision(const BoundaryDecision& decision) {
    RouterTelemetry tel;
    const Array& p = decision.p.value();
    tel.p.assign(p.data().begin(), p.data().end());
    tel.mask = decision.mask;
    tel.length = decision.mask.size();
    tel.chunks = decision.boundary_count();
    double sum_p = 0.0;
    for (double v : tel.p) {
        sum_p += v;
    }
    tel.y = static_cast<double>(tel.chunks) / static_cast<double>(tel.length);
    tel.y_prob = sum_p / static_cast<double>(tel.length);
    return tel;
}

namespace {

void check_target(double n) {
    if (!(n > 1.0)) {
        throw DomainError("balancing loss needs a compression target N > 1, got " + std::to_string(n));
    }
}

}  // namespace

double balancing_loss(double y, double y_prob, double n) {
    check_target(n);
    return (n / (n - 1.0)) * ((n - 1.0) * y * y_prob + (1.0 - y) * (1.0 - y_prob));
}

double balancing_loss(const RouterTelemetry& tel, double n) { return balancing_loss(tel.y, tel.y_prob, n); }

double balancing_loss_slope(double y, double n) {
    check_target(n);
    return (n / (n - 1.0)) * ((n - 1.0) * y - (1.0 - y));
}

Var balancing_loss(const Var& p, double y, double n) {
    // Affine in y': slope * y' + (N / (N - 1)) (1 - y).
    const double slope = balancing_loss_slope(y, n);
    const double offset = (n / (n - 1.0)) * (1.0 - y);
    return slope * mean(p) + offset;
}

BalancingOptimum balancing_optimum(double n) {
    check_target(n);
    const double y = 1.0 / n;
    return {y, balancing_loss(y, y, n)};
}

LossBreakdown total_loss(const Var& logits, std::span<const std::uint8_t> targets,
                         std::span<const RoutedStage> stages, std::span<const double> n, double alpha) {
    if (alpha < 0.0) {
        throw DomainError("alpha must be >= 0");
    }
    if (n.size() != stages.size()) {
        throw DimensionError("total_loss: " + std::to_string(n.size()) + " targets for " +
                             std::to_string(stages.size()) + " stages");
    }
    LossBreakdown out;
    out.total = softmax_cross_entropy(logits, targets);
    out.cross_entropy = out.total.value().item();
    if (alpha == 0.0) {
        for (std::size_t s = 0; s < stages.size(); ++s) {
            out.balancing += balancing_loss(stages[s].telemetry, n[s]);
        }
        return out;
    }
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const Var bal = balancing_loss(stages[s].p, stages[s].telemetry.y, n[s]);
        out.balancing += bal.value().item();
        out.total = out.total + alpha * bal;
    }
    return out;
}

}  // namespace hchunk
