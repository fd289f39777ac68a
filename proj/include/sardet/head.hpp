// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sardet/autograd.hpp"
#include "sardet/net.hpp"
#include "sardet/params.hpp"
#include "sardet/rng.hpp"

namespace sardet::head {

using ag::Var;

struct HeadConfig {
  int64_t roi_grid = 3;  // G
  int64_t temb_dim = 64;
  int64_t hidden = 256;
  int64_t classes = 3;  // K real classes; background id = K
  int64_t fpn_width = 64;
  int64_t k0 = 4;
  double canonical_scale = 224.0;
  double signal_scale = 2.0;
  double min_box_size = 1e-3;
};

/// Sinusoidal step embedding: pairs (sin(t / 10000^{2i/dim}), cos(...)).
Tensor time_embed(int64_t t, int64_t dim);

/// Pyramid level for a normalized box on an H x W image:
/// clamp(floor(k0 + log2(sqrt(w*h*H*W) / canonical)), 3..5).
int assign_level(double w, double h, int64_t img_h, int64_t img_w, int64_t k0, double canonical);

/// Bilinear samples at the G x G cell centers inside the box; returns the
/// pooled grid flattened [G*G*C] (row-major gy, gx, c).
Var roi_pool_level(const Var& level, double cx, double cy, double w, double h, int64_t G);
/// Spec-shaped entry: picks the level from the pyramid by box scale.
Tensor roi_pool(const net::FeaturePyramid& fp, double cx, double cy, double w, double h, int64_t G, int64_t k0 = 4,
                double canonical = 224.0);

struct Pyramid {
  Var p3, p4, p5;  // strides 8, 16, 32
  int64_t image_h = 0, image_w = 0;
};

struct HeadParams {
  Var w1, b1, w2, b2;      // shared MLP
  Var w_box, b_box;        // -> 4
  Var w_cls, b_cls;        // -> K+1
  HeadConfig cfg;

  static HeadParams init(const HeadConfig& cfg, Rng& rng, ParamStore& store, const std::string& prefix);
};

struct HeadOut {
  Var z0_hat;  // [N,4] in scaled space
  Var logits;  // [N,K+1]
};

/// Per box: roi features (+ step embedding + the box's own scaled
/// coordinates) -> shared MLP -> box and class branches.
HeadOut head_forward(const Pyramid& fp, const Tensor& z_t_scaled, int64_t t, const HeadParams& p);

/// 0.5 * mean over ground-truth rows of ||z0_hat - z0||^2
/// + lambda * mean over all rows of cross-entropy(logits, label).
Var train_loss(const HeadOut& out, const Tensor& z0_true_scaled, const std::vector<int>& labels,
               const std::vector<uint8_t>& origin_mask, double lambda = 1.0);

}  // namespace sardet::head
