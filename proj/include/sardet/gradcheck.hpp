// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sardet/autograd.hpp"

namespace sardet::nn {

struct GradCheckItem {
  std::string param;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  bool passed = true;
  double tol = 0.0;
  std::vector<GradCheckItem> items;  // worst element per parameter
  std::string summary() const;
};

/// Central finite-difference check of every element of every parameter
/// against the reverse-mode gradient of the scalar loss produced by
/// `loss_fn`. Error metric per element: |analytic - numeric| / max(1, |analytic|).
GradCheckReport grad_check(const std::function<ag::Var()>& loss_fn, const std::vector<ag::Var>& params,
                           double eps = 1e-5, double tol = 1e-4);

}  // namespace sardet::nn
