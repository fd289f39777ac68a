// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/mixer.hpp"

#include <cmath>

#include "sardet/nn.hpp"

namespace sardet::mixer {

void MixerConfig::validate() const {
  if (channels < 2 || channels % 2 != 0) {
    throw ConfigError("mixer channels must be even and >= 2, got " + std::to_string(channels));
  }
  if (pattern.empty() || pattern.size() > 12) {
    throw ConfigError("mixer_pattern must have 1..12 layers, got '" + pattern + "'");
  }
  for (char c : pattern) {
    if (c != 'M' && c != 'A') {
      throw ConfigError("mixer_pattern may contain only 'M' and 'A', got '" + pattern + "'");
    }
  }
  if (!allow_custom_pattern && pattern != "MMMAAA") {
    throw ConfigError("mixer_pattern '" + pattern +
                      "' differs from the default MMMAAA layout; set allow_custom_pattern to override");
  }
  if (heads < 1 || channels % heads != 0) {
    throw ConfigError("heads must divide mixer channels");
  }
  if (ssm_state < 1) throw ConfigError("ssm_state must be >= 1");
  if (ssm_chunk < 1) throw ConfigError("ssm_chunk must be >= 1");
  if (conv_kw < 1 || conv_kw % 2 == 0) throw ConfigError("conv_kw must be odd and >= 1");
  if (agents < 1) throw ConfigError("agent_n must be >= 1");
  if (mlp_ratio < 1) throw ConfigError("mlp_ratio must be >= 1");
}

MambaBlockParams MambaBlockParams::init(int64_t C, int64_t S, int64_t kw, int64_t chunk, Rng& rng,
                                        ParamStore& store, const std::string& prefix) {
  if (C % 2 != 0) throw ConfigError("mamba_block channels must be even, got " + std::to_string(C));
  MambaBlockParams p;
  const int64_t ch = C / 2;
  p.w_in1 = store.add(prefix + ".w_in1", nn::xavier_uniform({C, ch}, rng));
  p.b_in1 = store.add(prefix + ".b_in1", Tensor::zeros({ch}));
  p.w_in2 = store.add(prefix + ".w_in2", nn::xavier_uniform({C, ch}, rng));
  p.b_in2 = store.add(prefix + ".b_in2", Tensor::zeros({ch}));
  // Depthwise kernels; delta-like init keeps the fresh block near identity.
  Tensor c1({ch, kw});
  Tensor c2({ch, kw});
  const double bound = std::sqrt(6.0 / static_cast<double>(2 * kw));
  for (int64_t i = 0; i < c1.size(); ++i) c1[i] = rng.uniform(-bound, bound);
  for (int64_t i = 0; i < c2.size(); ++i) c2[i] = rng.uniform(-bound, bound);
  p.conv1 = store.add(prefix + ".conv1", std::move(c1));
  p.conv2 = store.add(prefix + ".conv2", std::move(c2));
  for (size_t d = 0; d < 4; ++d) {
    p.dirs[d] = ssm::SsmParams::init(ch, S, rng, store, prefix + ".ssm" + std::to_string(d));
  }
  p.w_out = store.add(prefix + ".w_out", Tensor::zeros({C, C}));
  p.b_out = store.add(prefix + ".b_out", Tensor::zeros({C}));
  p.conv_kw = kw;
  p.chunk = chunk;
  return p;
}

Var mamba_block(const Var& x, int64_t H, int64_t W, const MambaBlockParams& p) {
  if (x.rank() != 2 || x.dim(0) != H * W) {
    throw DimError("mamba_block: tokens " + shape_str(x.val().shape()) + " do not match grid " + std::to_string(H) +
                   "x" + std::to_string(W));
  }
  if (x.dim(1) % 2 != 0) throw ConfigError("mamba_block: channel count must be even");
  const int pad = static_cast<int>(p.conv_kw - 1) / 2;
  Var a = nn::silu(nn::conv1d_depthwise(nn::linear(x, p.w_in1, p.b_in1), p.conv1, pad));
  a = ssm::sar_scan(a, H, W, p.dirs, p.chunk);
  Var b = nn::silu(nn::conv1d_depthwise(nn::linear(x, p.w_in2, p.b_in2), p.conv2, pad));
  return nn::linear(nn::concat_cols(a, b), p.w_out, p.b_out);
}

Mixer Mixer::init(int64_t c_in, const MixerConfig& cfg, Rng& rng, ParamStore& store, const std::string& prefix) {
  cfg.validate();
  Mixer m;
  m.cfg = cfg;
  const int64_t C = cfg.channels;
  // Entry downsample starts at zero: the whole module is then exactly zero,
  // so adding it onto a backbone feature leaves the network unchanged.
  m.entry_w = store.add(prefix + ".entry_w", Tensor::zeros({C, c_in, 2, 2}));
  m.entry_b = store.add(prefix + ".entry_b", Tensor::zeros({C}));
  for (size_t i = 0; i < cfg.pattern.size(); ++i) {
    LayerParams lp;
    lp.kind = cfg.pattern[i];
    const std::string lpfx = prefix + ".layer" + std::to_string(i);
    lp.norm1_g = store.add(lpfx + ".norm1_g", Tensor::full({C}, 1.0));
    lp.norm1_b = store.add(lpfx + ".norm1_b", Tensor::zeros({C}));
    if (lp.kind == 'M') {
      lp.mamba = MambaBlockParams::init(C, cfg.ssm_state, cfg.conv_kw, cfg.ssm_chunk, rng, store, lpfx + ".mamba");
    } else {
      lp.attn = attn::AttentionParams::init(C, cfg.heads, cfg.agents, rng, store, lpfx + ".attn");
    }
    lp.norm2_g = store.add(lpfx + ".norm2_g", Tensor::full({C}, 1.0));
    lp.norm2_b = store.add(lpfx + ".norm2_b", Tensor::zeros({C}));
    const int64_t hidden = C * cfg.mlp_ratio;
    lp.mlp_w1 = store.add(lpfx + ".mlp_w1", nn::xavier_uniform({C, hidden}, rng));
    lp.mlp_b1 = store.add(lpfx + ".mlp_b1", Tensor::zeros({hidden}));
    lp.mlp_w2 = store.add(lpfx + ".mlp_w2", Tensor::zeros({hidden, C}));
    lp.mlp_b2 = store.add(lpfx + ".mlp_b2", Tensor::zeros({C}));
    m.layers.push_back(std::move(lp));
  }
  return m;
}

Var Mixer::forward(const Var& x) const {
  if (x.rank() != 3) throw DimError("mixer: expected [C,H,W], got " + shape_str(x.val().shape()));
  const int64_t H = x.dim(1), W = x.dim(2);
  if (H % 2 != 0 || W % 2 != 0) {
    throw ConfigError("mixer: spatial size " + std::to_string(H) + "x" + std::to_string(W) + " must be even");
  }
  Var grid = nn::conv2d(x, entry_w, entry_b, 2, 0);
  const int64_t Hs = H / 2, Ws = W / 2;
  Var tokens = nn::chw_to_tokens(grid);
  for (const LayerParams& lp : layers) {
    Var normed = nn::layer_norm(tokens, lp.norm1_g, lp.norm1_b);
    Var mixed;
    if (lp.kind == 'M') {
      mixed = mamba_block(normed, Hs, Ws, *lp.mamba);
    } else {
      mixed = attn::agent_attention_block(normed, *lp.attn);
    }
    Var xhat = nn::add(mixed, tokens);
    Var h = nn::silu(nn::linear(nn::layer_norm(xhat, lp.norm2_g, lp.norm2_b), lp.mlp_w1, lp.mlp_b1));
    tokens = nn::add(nn::linear(h, lp.mlp_w2, lp.mlp_b2), xhat);
  }
  return nn::tokens_to_chw(tokens, Hs, Ws);
}

}  // namespace sardet::mixer
