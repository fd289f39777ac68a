// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sardet/boxes.hpp"
#include "sardet/tensor.hpp"

namespace sardet::synth {

struct SceneSample {
  Tensor image;  // [1,H,W] nonnegative intensities
  BoxSet gt;
  uint64_t seed = 0;
};

/// Sparse bright-scatterer targets on multiplicative-speckle background.
/// Class layouts: 0 = cross, 1 = line, 2+ = L-shape (cycled for more
/// classes). Entirely determined by the seed.
SceneSample gen_scene(uint64_t seed, int64_t H, int64_t W, int64_t class_count);

/// Canonical noiseless layout raster for one class (test oracle support).
Tensor class_template(int64_t cls, int64_t size);

/// Per scene: scene_<id>.grid (magic MDG1, u32 H, u32 W, little-endian f32)
/// and scene_<id>.boxes.csv with header class,cx,cy,w,h.
void write_dataset(const std::string& dir, const std::vector<uint64_t>& seeds, int64_t H, int64_t W,
                   int64_t class_count);
std::vector<SceneSample> read_dataset(const std::string& dir);

}  // namespace sardet::synth
