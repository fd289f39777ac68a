// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace sardet::nn {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& it : items) {
    os << (it.passed ? "ok   " : "FAIL ") << it.param << " worst[" << it.worst_index << "] analytic=" << it.analytic
       << " numeric=" << it.numeric << " rel_err=" << it.rel_err << "\n";
  }
  return os.str();
}

GradCheckReport grad_check(const std::function<ag::Var()>& loss_fn, const std::vector<ag::Var>& params, double eps,
                           double tol) {
  GradCheckReport report;
  report.tol = tol;

  for (ag::Var p : params) p.zero_grad();
  ag::Var loss = loss_fn();
  loss.backward();

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const ag::Var& p : params) analytic.push_back(p.grad());

  ag::NoGradGuard ng;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    ag::Var p = params[pi];
    Tensor& w = p.mutable_val();
    GradCheckItem item;
    item.param = p.name().empty() ? ("param" + std::to_string(pi)) : p.name();
    for (int64_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + eps;
      const double fp = loss_fn().val()[0];
      w[i] = saved - eps;
      const double fm = loss_fn().val()[0];
      w[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (rel >= item.rel_err) {
        item.rel_err = rel;
        item.worst_index = i;
        item.analytic = a;
        item.numeric = numeric;
      }
    }
    item.passed = item.rel_err <= tol;
    report.passed = report.passed && item.passed;
    report.items.push_back(std::move(item));
  }
  return report;
}

}  // namespace sardet::nn
