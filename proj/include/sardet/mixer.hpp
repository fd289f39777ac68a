// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sardet/attention.hpp"
#include "sardet/autograd.hpp"
#include "sardet/params.hpp"
#include "sardet/rng.hpp"
#include "sardet/ssm.hpp"

namespace sardet::mixer {

using ag::Var;

struct MixerConfig {
  int64_t channels = 128;  // token width after the entry downsample
  // Layer kinds, 'M' = mamba block, 'A' = agent-attention block. The default
  // 3+3 layout is the only one accepted unless allow_custom_pattern is set.
  std::string pattern = "MMMAAA";
  bool allow_custom_pattern = false;
  int64_t ssm_state = 16;
  int64_t ssm_chunk = 64;
  int64_t conv_kw = 3;
  int64_t heads = 4;
  int64_t agents = 16;
  int64_t mlp_ratio = 4;

  void validate() const;
};

struct MambaBlockParams {
  Var w_in1, b_in1;  // C -> C/2 (scan branch)
  Var w_in2, b_in2;  // C -> C/2 (symmetric branch)
  Var conv1, conv2;  // depthwise [C/2, kw]
  std::array<ssm::SsmParams, 4> dirs;
  Var w_out, b_out;  // concat C -> C, zero-init weight
  int64_t conv_kw = 3;
  int64_t chunk = 0;

  static MambaBlockParams init(int64_t C, int64_t S, int64_t kw, int64_t chunk, Rng& rng, ParamStore& store,
                               const std::string& prefix);
};

/// Dual-branch token mixer on tokens x[L,C] laid out in row-major order of an
/// H x W grid:
///   x1 = SARScan(silu(Conv(Linear(x)))), x2 = silu(Conv(Linear(x))),
///   out = Linear(concat(x1, x2)).
Var mamba_block(const Var& x, int64_t H, int64_t W, const MambaBlockParams& p);

struct LayerParams {
  char kind = 'M';
  Var norm1_g, norm1_b;
  std::optional<MambaBlockParams> mamba;
  std::optional<attn::AttentionParams> attn;
  Var norm2_g, norm2_b;
  Var mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // second linear zero-init
};

/// Feature mixer: stride-2 entry downsample (2x2 conv patch merge), then the
/// configured layer stack with pre-norm residuals:
///   xhat = Block(Norm(x)) + x;  x = MLP(Norm(xhat)) + xhat.
struct Mixer {
  MixerConfig cfg;
  Var entry_w, entry_b;  // conv [C4, C3, 2, 2], zero-init weight
  std::vector<LayerParams> layers;

  /// [C3,H,W] -> [C4,H/2,W/2]; H and W must be even.
  Var forward(const Var& x) const;

  static Mixer init(int64_t c_in, const MixerConfig& cfg, Rng& rng, ParamStore& store, const std::string& prefix);
};

}  // namespace sardet::mixer
