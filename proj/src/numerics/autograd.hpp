// Copyright 2026 The ggpseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "numerics/tensor.hpp"

namespace ggpseg {

template <typename Real>
struct Node;

/// Backward rule of a recorded primitive. Reads `self.grad` and accumulates
/// into the gradients of `self.inputs`.
template <typename Real>
using BackwardFn = std::function<void(Node<Real>& self)>;

template <typename Real>
struct Node {
  Tensor<Real> value;
  Tensor<Real> grad;
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn<Real> backward;

  bool is_leaf() const { return inputs.empty(); }

  /// Gradient buffer, zero-initialised on first use.
  Tensor<Real>& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor<Real>(value.shape());
    return grad;
  }
};

namespace detail {
inline thread_local bool grad_mode_enabled = true;
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_enabled; }

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_enabled) {
    detail::grad_mode_enabled = false;
  }
  ~NoGradGuard() { detail::grad_mode_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Handle to a node of the dynamic computation graph. Copies share the node.
template <typename Real>
class Var {
 public:
  Var() = default;

  explicit Var(Tensor<Real> value, bool requires_grad = false)
      : node_(std::make_shared<Node<Real>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Var parameter(Tensor<Real> value) { return Var(std::move(value), true); }
  static Var constant(Tensor<Real> value) { return Var(std::move(value), false); }

  explicit Var(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Tensor<Real>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }

  /// Direct write access for optimisers; only leaves may be mutated.
  Tensor<Real>& mutable_value() {
    if (!node_->is_leaf()) {
      throw UsageError("only leaf variables can be modified in place");
    }
    return node_->value;
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) {
    if (!node_->is_leaf()) {
      throw UsageError("requires_grad can only be toggled on leaves");
    }
    node_->requires_grad = on;
  }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }

  /// Accumulated gradient, or zeros when none has been produced yet.
  Tensor<Real> grad() const {
    if (has_grad()) return node_->grad;
    return Tensor<Real>(node_->value.shape());
  }

  void zero_grad() { node_->grad = Tensor<Real>(); }

  const std::string& op() const { return node_->op; }
  Node<Real>* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node<Real>>& shared() const noexcept { return node_; }

 private:
  std::shared_ptr<Node<Real>> node_;
};

/// Creates the output node of a primitive. Rejects non-finite values and
/// only records the backward rule when some input is tracked.
template <typename Real>
Var<Real> record(Tensor<Real> value, std::string op,
                 std::vector<Var<Real>> inputs, BackwardFn<Real> backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + op);
  }
  auto node = std::make_shared<Node<Real>>();
  node->value = std::move(value);
  node->op = std::move(op);
  bool tracked = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) tracked = tracked || in.requires_grad();
  }
  if (tracked) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.shared());
    node->backward = std::move(backward);
  }
  return Var<Real>(std::move(node));
}

/// Topologically ordered record of the tracked primitives reachable from a
/// root. Every node appears after all of its inputs.
template <typename Real>
class Graph {
 public:
  static Graph record(const Var<Real>& root) {
    Graph graph;
    if (!root.defined() || !root.requires_grad()) return graph;
    std::unordered_set<Node<Real>*> visited;
    // Iterative post-order DFS; deep GRU chains would overflow recursion.
    std::vector<std::pair<Node<Real>*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    visited.insert(root.node());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        Node<Real>* child = node->inputs[next++].get();
        if (child->requires_grad && visited.insert(child).second) {
          stack.emplace_back(child, 0);
        }
      } else {
        graph.order_.push_back(node);
        stack.pop_back();
      }
    }
    return graph;
  }

  const std::vector<Node<Real>*>& nodes() const { return order_; }

 private:
  std::vector<Node<Real>*> order_;
};

/// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
/// calls; interior gradients are reset first.
template <typename Real>
void backward(const Var<Real>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw UsageError("loss is not connected to any tracked tensor");
  }
  Graph<Real> graph = Graph<Real>::record(loss);
  const auto& order = graph.nodes();
  for (Node<Real>* node : order) {
    if (!node->is_leaf()) node->grad = Tensor<Real>();
  }
  loss.node()->grad_buffer()[0] += Real{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* node = *it;
    if (node->is_leaf() || node->grad.empty()) continue;
    if (!node->grad.all_finite()) {
      throw NumericError("non-finite gradient reaching " + node->op);
    }
    node->backward(*node);
  }
  for (Node<Real>* node : order) {
    if (node->is_leaf() && !node->grad.empty() && !node->grad.all_finite()) {
      throw NumericError("non-finite gradient on leaf tensor");
    }
  }
}

}  // namespace ggpseg
