// Copyright (c) 2026 The hchunk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <vector>

#include "hchunk/ndtensor/array.hpp"

namespace hchunk {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid as long as the
/// tape that created it.
class Var {
   public:
    Var() = default;

    Tape& tape() const;
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    const Array& value() const;
    const Shape& shape() const;
    const Array& grad() const;

   private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape over Arrays.
///
/// Nodes are appended in evaluation order, so ids form a topological order and
/// backward() is a single descending sweep. A tape lives for one forward and
/// one backward pass; build a fresh one per training step.
class Tape {
   public:
    /// Receives the gradient flowing into the node and accumulates into parents.
    using BackwardFn = std::function<void(Tape&, const Array&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Array value);
    Var variable(Array value);

    /// Records an op output. When no parent requires a gradient the node is
    /// stored as a constant and `fn` is dropped.
    Var record(Array value, std::initializer_list<Var> parents, BackwardFn fn);
    Var record(Array value, const std::vector<Var>& parents, BackwardFn fn);

    const Array& value(const Var& v) const;
    bool requires_grad(const Var& v) const;
    bool has_grad(const Var& v) const;
    const Array& grad(const Var& v) const;

    /// Gradient buffer of `v`, zero-initialised on first access.
    Array& grad_buffer(const Var& v);
    void accumulate(const Var& v, const Array& g);

    /// Seeds d(root)/d(root) = 1 and propagates to every reachable node.
    /// Throws ContractError for a non-scalar root or a second call without
    /// reset_gradients().
    void backward(const Var& root);
    void reset_gradients();

    std::size_t size() const noexcept { return nodes_.size(); }

   private:
    struct Node {
        Array value;
        Array grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    Var push(Node node);
    const Node& node(const Var& v) const;
    Node& node(const Var& v);

    std::deque<Node> nodes_;  // push_back keeps references to recorded values valid
    bool backward_done_ = false;
};

}  // namespace hchunk
