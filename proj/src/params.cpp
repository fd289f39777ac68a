// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/params.hpp"

#include <cmath>

namespace sardet {

ag::Var ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  ag::Var v = ag::Var::param(std::move(init), name);
  index_[name] = params_.size();
  params_.push_back(v);
  return v;
}

ag::Var ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return params_[it->second];
}

void ParamStore::zero_grad() {
  for (const ag::Var& p : params_) const_cast<ag::Var&>(p).zero_grad();
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const ag::Var& p : params_) n += p.val().size();
  return n;
}

void AdamW::step(const std::vector<ag::Var>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = Tensor::zeros(params[i].val().shape());
      v_[i] = Tensor::zeros(params[i].val().shape());
    }
  }
  t_ += 1;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    ag::Var p = params[i];
    Tensor& w = p.mutable_val();
    const Tensor& g = p.grad();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * w[j]);
    }
  }
}

}  // namespace sardet
