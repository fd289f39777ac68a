// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <string>
#include <vector>

#include "sardet/boxes.hpp"
#include "sardet/params.hpp"
#include "sardet/tensor.hpp"

namespace sardet::io {

/// Flat binary tensor container: magic "MDK1", u32 rank, u32 dims, then
/// little-endian 64-bit reals in row-major order.
void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

/// Scene grid: magic "MDG1", u32 H, u32 W, little-endian 32-bit reals.
void write_grid(const std::string& path, const Tensor& img);  // [1,H,W] or [H,W]
Tensor read_grid(const std::string& path);                    // -> [1,H,W]

/// Ground-truth boxes: header `class,cx,cy,w,h`.
void write_boxes_csv(const std::string& path, const BoxSet& boxes);
BoxSet read_boxes_csv(const std::string& path);

/// Checkpoint: one tensor file per parameter plus manifest.txt listing
/// name and shape; loading validates every shape.
void save_checkpoint(const std::string& dir, const ParamStore& params);
void load_checkpoint(const std::string& dir, ParamStore& params);

/// Plain portable graymap (P5) with detection outlines at max intensity.
void write_pgm_overlay(const std::string& path, const Tensor& img, const BoxSet& dets);

}  // namespace sardet::io
