// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/net.hpp"

#include "sardet/nn.hpp"

namespace sardet::net {

namespace {

// Layer norm over channels at each spatial position.
Var channel_norm(const Var& x, const Var& gamma, const Var& beta) {
  const int64_t h = x.dim(1), w = x.dim(2);
  return nn::tokens_to_chw(nn::layer_norm(nn::chw_to_tokens(x), gamma, beta), h, w);
}

ConvUnit make_unit(int64_t c_in, int64_t c_out, int64_t k, int stride, int pad, Rng& rng, ParamStore& store,
                   const std::string& prefix) {
  ConvUnit u;
  u.w = store.add(prefix + ".w", nn::xavier_uniform({c_out, c_in, k, k}, rng));
  u.b = store.add(prefix + ".b", Tensor::zeros({c_out}));
  u.gamma = store.add(prefix + ".gamma", Tensor::full({c_out}, 1.0));
  u.beta = store.add(prefix + ".beta", Tensor::zeros({c_out}));
  u.stride = stride;
  u.pad = pad;
  return u;
}

}  // namespace

Var conv_unit(const Var& x, const ConvUnit& u) {
  return nn::silu(channel_norm(nn::conv2d(x, u.w, u.b, u.stride, u.pad), u.gamma, u.beta));
}

Backbone Backbone::init(std::array<int64_t, 4> channels, Rng& rng, ParamStore& store, const std::string& prefix) {
  Backbone bb;
  bb.channels = channels;
  int64_t c_in = 1;
  for (int s = 0; s < 4; ++s) {
    const int64_t c_out = channels[static_cast<size_t>(s)];
    const std::string spfx = prefix + ".stage" + std::to_string(s);
    if (s == 0) {
      // Stride 4: two 2x2 patch-merge convs.
      bb.stages[0][0] = make_unit(c_in, c_out, 2, 2, 0, rng, store, spfx + ".0");
      bb.stages[0][1] = make_unit(c_out, c_out, 2, 2, 0, rng, store, spfx + ".1");
    } else {
      bb.stages[static_cast<size_t>(s)][0] = make_unit(c_in, c_out, 2, 2, 0, rng, store, spfx + ".0");
      bb.stages[static_cast<size_t>(s)][1] = make_unit(c_out, c_out, 3, 1, 1, rng, store, spfx + ".1");
    }
    c_in = c_out;
  }
  return bb;
}

Backbone::Out Backbone::forward(const Var& img) const {
  if (img.rank() != 3 || img.dim(0) != 1) {
    throw DimError("backbone: expected image [1,H,W], got " + shape_str(img.val().shape()));
  }
  if (img.dim(1) % 32 != 0 || img.dim(2) % 32 != 0) {
    throw ConfigError("backbone: image size " + std::to_string(img.dim(1)) + "x" + std::to_string(img.dim(2)) +
                      " must be divisible by 32");
  }
  Out out;
  Var x = img;
  for (int s = 0; s < 4; ++s) {
    x = conv_unit(x, stages[static_cast<size_t>(s)][0]);
    x = conv_unit(x, stages[static_cast<size_t>(s)][1]);
    switch (s) {
      case 0: out.res2 = x; break;
      case 1: out.res3 = x; break;
      case 2: out.res4 = x; break;
      case 3: out.res5 = x; break;
    }
  }
  return out;
}

Var fuse_res4(const Var& res4, const Var& mixer_out) {
  if (!res4.val().same_shape(mixer_out.val())) {
    throw DimError("fuse_res4: shape mismatch " + shape_str(res4.val().shape()) + " vs " +
                   shape_str(mixer_out.val().shape()));
  }
  return nn::add(res4, mixer_out);
}

Fpn Fpn::init(int64_t c3, int64_t c4, int64_t c5, int64_t width, Rng& rng, ParamStore& store,
              const std::string& prefix) {
  Fpn f;
  f.width = width;
  f.lat3_w = store.add(prefix + ".lat3_w", nn::xavier_uniform({width, c3, 1, 1}, rng));
  f.lat3_b = store.add(prefix + ".lat3_b", Tensor::zeros({width}));
  f.lat4_w = store.add(prefix + ".lat4_w", nn::xavier_uniform({width, c4, 1, 1}, rng));
  f.lat4_b = store.add(prefix + ".lat4_b", Tensor::zeros({width}));
  f.lat5_w = store.add(prefix + ".lat5_w", nn::xavier_uniform({width, c5, 1, 1}, rng));
  f.lat5_b = store.add(prefix + ".lat5_b", Tensor::zeros({width}));
  f.smooth3_w = store.add(prefix + ".smooth3_w", nn::xavier_uniform({width, width, 3, 3}, rng));
  f.smooth3_b = store.add(prefix + ".smooth3_b", Tensor::zeros({width}));
  f.smooth4_w = store.add(prefix + ".smooth4_w", nn::xavier_uniform({width, width, 3, 3}, rng));
  f.smooth4_b = store.add(prefix + ".smooth4_b", Tensor::zeros({width}));
  f.smooth5_w = store.add(prefix + ".smooth5_w", nn::xavier_uniform({width, width, 3, 3}, rng));
  f.smooth5_b = store.add(prefix + ".smooth5_b", Tensor::zeros({width}));
  return f;
}

Fpn::Out Fpn::forward(const Var& res3, const Var& res4, const Var& res5) const {
  Var t5 = nn::conv2d(res5, lat5_w, lat5_b, 1, 0);
  Var t4 = nn::add(nn::conv2d(res4, lat4_w, lat4_b, 1, 0), nn::upsample2x(t5));
  Var t3 = nn::add(nn::conv2d(res3, lat3_w, lat3_b, 1, 0), nn::upsample2x(t4));
  Out out;
  out.p3 = nn::conv2d(t3, smooth3_w, smooth3_b, 1, 1);
  out.p4 = nn::conv2d(t4, smooth4_w, smooth4_b, 1, 1);
  out.p5 = nn::conv2d(t5, smooth5_w, smooth5_b, 1, 1);
  return out;
}

}  // namespace sardet::net
