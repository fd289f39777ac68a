// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <map>
#include <string>

#include "sardet/autograd.hpp"
#include "sardet/params.hpp"
#include "sardet/rng.hpp"

namespace sardet::net {

using ag::Var;

/// Map from stride to feature grid [C, H/stride, W/stride].
using FeaturePyramid = std::map<int64_t, Tensor>;

struct ConvUnit {
  Var w, b;          // conv kernel and bias
  Var gamma, beta;   // per-position channel norm
  int stride = 1;
  int pad = 0;
};

Var conv_unit(const Var& x, const ConvUnit& u);  // conv -> norm -> silu

/// Four-stage stem; strides 4/8/16/32 with the configured channel widths.
/// Each stage is two conv -> norm -> silu units, the first downsampling.
struct Backbone {
  std::array<std::array<ConvUnit, 2>, 4> stages;
  std::array<int64_t, 4> channels{32, 64, 128, 256};

  struct Out {
    Var res2, res3, res4, res5;
  };
  Out forward(const Var& img) const;  // img [1,H,W], H and W divisible by 32

  static Backbone init(std::array<int64_t, 4> channels, Rng& rng, ParamStore& store, const std::string& prefix);
};

/// Elementwise sum of the original stride-16 feature and the mixer branch.
Var fuse_res4(const Var& res4, const Var& mixer_out);

/// Top-down feature pyramid: 1x1 laterals to a common width, nearest 2x
/// upsample + add, 3x3 smoothing per level; emits strides {8, 16, 32}.
struct Fpn {
  Var lat3_w, lat3_b, lat4_w, lat4_b, lat5_w, lat5_b;
  Var smooth3_w, smooth3_b, smooth4_w, smooth4_b, smooth5_w, smooth5_b;
  int64_t width = 64;

  struct Out {
    Var p3, p4, p5;
  };
  Out forward(const Var& res3, const Var& res4, const Var& res5) const;

  static Fpn init(int64_t c3, int64_t c4, int64_t c5, int64_t width, Rng& rng, ParamStore& store,
                  const std::string& prefix);
};

}  // namespace sardet::net
