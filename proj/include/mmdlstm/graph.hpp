// Copyright 2026 The mmdlstm Authors.
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
#include <vector>

#include "mmdlstm/tensor.hpp"

namespace mmdlstm {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in the differentiation graph.
///
/// `backward` reads this node's gradient and accumulates into the gradients
/// of `inputs`. Leaves (parameters, constants) have no backward function.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  std::string op;

  Tensor& ensure_grad();
  bool has_grad() const { return !grad.empty() || value.empty(); }
};

/// Handle to a graph node. Copying shares the node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->ensure_grad(); }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  const NodePtr& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  void zero_grad();

 private:
  NodePtr node_;
};

/// Leaf that does not receive gradients.
Var constant(Tensor value);
/// Leaf that receives gradients.
Var leaf(Tensor value);

/// Builds an interior node. If gradient recording is off (NoGradGuard) or no
/// input requires a gradient, the node keeps no inputs and no closure.
Var make_node(std::string op, Tensor value, std::vector<Var> inputs,
              std::function<void(Node&)> backward);

/// Reverse-mode accumulation from a scalar loss. Each reachable node is
/// visited exactly once, in reverse topological order.
void backward(const Var& loss);

/// Number of nodes reachable from `root` (including it).
std::size_t graph_size(const Var& root);

bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace mmdlstm
