// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#include "hchunk/ndtensor/tape.hpp"

#include <algorithm>
#include <string>

#include "hchunk/error.hpp"

namespace hchunk {

Tape& Var::tape() const {
    if (tape_ == nullptr) {
        throw ContractError("use of an unbound Var");
    }
    return *tape_;
}

const Array& Var::value() const { return tape().value(*this); }
const Shape& Var::shape() const { return value().shape(); }
const Array& Var::grad() const { return tape().grad(*this); }

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(const Var& v) const {
    if (v.tape_ != this || v.id_ >= nodes_.size()) {
        throw ContractError("Var does not belong to this tape");
    }
    return nodes_[v.id_];
}

Tape::Node& Tape::node(const Var& v) {
    return const_cast<Node&>(static_cast<const Tape*>(this)->node(v));
}

Var Tape::constant(Array value) { return push(Node{std::move(value), {}, false, nullptr}); }

Var Tape::variable(Array value) { return push(Node{std::move(value), {}, true, nullptr}); }

Var Tape::record(Array value, std::initializer_list<Var> parents, BackwardFn fn) {
    const bool needs = std::ranges::any_of(parents, [this](const Var& p) { return node(p).requires_grad; });
    if (!needs) {
        return constant(std::move(value));
    }
    return push(Node{std::move(value), {}, true, std::move(fn)});
}

Var Tape::record(Array value, const std::vector<Var>& parents, BackwardFn fn) {
    const bool needs = std::ranges::any_of(parents, [this](const Var& p) { return node(p).requires_grad; });
    if (!needs) {
        return constant(std::move(value));
    }
    return push(Node{std::move(value), {}, true, std::move(fn)});
}

const Array& Tape::value(const Var& v) const { return node(v).value; }

bool Tape::requires_grad(const Var& v) const { return node(v).requires_grad; }

bool Tape::has_grad(const Var& v) const { return !node(v).grad.empty(); }

const Array& Tape::grad(const Var& v) const {
    const Node& n = node(v);
    if (n.grad.empty()) {
        throw ContractError("no gradient reached node " + std::to_string(v.id_));
    }
    return n.grad;
}

Array& Tape::grad_buffer(const Var& v) {
    Node& n = node(v);
    if (n.grad.empty()) {
        n.grad = Array(n.value.shape(), 0.0);
    }
    return n.grad;
}

void Tape::accumulate(const Var& v, const Array& g) {
    if (!node(v).requires_grad) {
        return;
    }
    Array& buf = grad_buffer(v);
    if (buf.shape() != g.shape()) {
        throw DimensionError("gradient shape " + shape_string(g.shape()) + " does not match value shape " +
                             shape_string(buf.shape()));
    }
    auto dst = buf.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

void Tape::backward(const Var& root) {
    if (backward_done_) {
        throw ContractError("backward() already ran on this tape; call reset_gradients() first");
    }
    Node& r = node(root);
    if (r.value.size() != 1) {
        throw ContractError("backward() needs a scalar root, got shape " + shape_string(r.value.shape()));
    }
    backward_done_ = true;
    if (!r.requires_grad) {
        return;
    }
    grad_buffer(root).fill(1.0);
    for (std::size_t id = root.id_ + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.backward && !n.grad.empty()) {
            n.backward(*this, n.grad);
        }
    }
}

void Tape::reset_gradients() {
    for (Node& n : nodes_) {
        n.grad = Array();
    }
    backward_done_ = false;
}

}  // namespace hchunk
