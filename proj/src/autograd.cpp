// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/autograd.hpp"

#include <unordered_set>

#include "sardet/kernels.hpp"

namespace sardet::ag {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor::zeros(value.shape());
  return grad;
}

void Node::accum_grad(const Tensor& g) {
  Tensor& dst = ensure_grad();
  kernels::axpy(1.0, g.data(), dst.data(), g.size());
}

Var::Var(Tensor value, bool requires_grad, std::string name) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->name = std::move(name);
}

void Var::zero_grad() {
  if (node_ && !node_->grad.empty()) node_->grad.fill(0.0);
}

void Var::backward() const {
  if (!node_) throw DimError("backward() on undefined var");
  if (node_->value.size() != 1) {
    throw DimError("backward() requires a scalar, got shape " + shape_str(node_->value.shape()));
  }

  // Post-order DFS over parent edges; reversed it yields consumers-first.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  visited.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

Var make_op(Tensor out, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  bool needs = grad_enabled();
  if (needs) {
    needs = false;
    for (const Var& p : parents) {
      if (p.requires_grad()) {
        needs = true;
        break;
      }
    }
  }
  if (!needs) return Var(std::move(out), false);

  Var v(std::move(out), true);
  v.node()->backward_fn = std::move(backward_fn);
  auto& ps = v.node()->parents;
  ps.reserve(parents.size());
  for (Var& p : parents) ps.push_back(p.node());
  return v;
}

}  // namespace sardet::ag
