// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sardet/autograd.hpp"

namespace sardet {

/// Named registry of learnable leaves. Single-writer: updates go through the
/// optimizer; forward passes only read values.
class ParamStore {
 public:
  ag::Var add(const std::string& name, Tensor init);
  const std::vector<ag::Var>& all() const { return params_; }
  ag::Var find(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  void zero_grad();
  int64_t total_size() const;

 private:
  std::vector<ag::Var> params_;
  std::unordered_map<std::string, size_t> index_;
};

/// Adaptive-moment gradient descent with decoupled weight decay.
class AdamW {
 public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ag::Var>& params);

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace sardet
