// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sardet/tensor.hpp"

namespace sardet::ag {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use, same shape as value
  bool requires_grad = false;
  std::string name;
  std::vector<NodePtr> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
  void accum_grad(const Tensor& g);
};

/// Whether newly built ops record backward closures (thread-local).
bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Handle to a node in the reverse-mode tape. Value-semantic; copies share
/// the node. Tensors produced by ops are treated as immutable.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false, std::string name = {});

  static Var leaf(Tensor value) { return Var(std::move(value), false); }
  static Var param(Tensor value, std::string name) { return Var(std::move(value), true, std::move(name)); }

  bool defined() const { return node_ != nullptr; }
  const Tensor& val() const { return node_->value; }
  Tensor& mutable_val() { return node_->value; }
  Tensor& grad() const { return node_->ensure_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::string& name() const { return node_->name; }

  const Shape& shape() const { return node_->value.shape(); }
  int64_t dim(int i) const { return node_->value.dim(i); }
  int rank() const { return node_->value.rank(); }

  void zero_grad();
  /// Reverse pass from a scalar; seeds d(self)/d(self) = 1 and accumulates
  /// into every reachable grad-requiring node.
  void backward() const;

  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

/// Builds an op node. When grads are disabled or no parent requires them,
/// the result is a detached leaf and backward_fn is dropped.
Var make_op(Tensor out, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

}  // namespace sardet::ag
