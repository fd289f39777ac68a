// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <vector>

#include "sardet/tensor.hpp"

namespace sardet {

/// N boxes as (cx, cy, w, h) in normalized [0,1] image coordinates, with
/// optional per-box class label and score. Empty set <=> boxes tensor empty.
struct BoxSet {
  Tensor boxes;                // [N,4]
  std::vector<int> labels;     // class ids; the background id is `classes`
  std::vector<double> scores;  // in [0,1]

  int64_t size() const { return boxes.empty() ? 0 : boxes.dim(0); }
};

}  // namespace sardet
