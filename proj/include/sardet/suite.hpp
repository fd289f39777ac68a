// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <string>

#include "sardet/detector.hpp"

namespace sardet::suite {

struct GradSuiteResult {
  bool passed = true;
  std::string log;
};

/// Reduced-width configuration that still exercises every module.
DetectorConfig toy_detector_config();

/// Finite-difference checks of every layer plus the end-to-end toy pipeline
/// (backbone -> fuse -> FPN -> head -> loss), tol 1e-4, eps 1e-5.
GradSuiteResult run_gradient_suite(uint64_t seed = 7);

}  // namespace sardet::suite
