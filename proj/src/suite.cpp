// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/suite.hpp"

#include <cstdio>
#include <functional>

#include "sardet/attention.hpp"
#include "sardet/gradcheck.hpp"
#include "sardet/mixer.hpp"
#include "sardet/nn.hpp"
#include "sardet/ssm.hpp"

namespace sardet::suite {

namespace {

using ag::Var;

Tensor rand_t(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(s));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Projection onto a fixed random tensor, so the scalar loss has generic
// gradients and is identical across repeated closure calls.
Var project(const Var& out, const Tensor& r) { return nn::sum_all_v(nn::mul(out, Var::leaf(r))); }

void randomize_params(ParamStore& store, Rng& rng, double scale = 0.4) {
  for (const ag::Var& pc : store.all()) {
    ag::Var p = pc;
    Tensor& w = p.mutable_val();
    for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-scale, scale);
  }
}

struct Harness {
  GradSuiteResult result;

  void check(const std::string& name, const std::function<Var()>& loss, const std::vector<Var>& params) {
    const nn::GradCheckReport rep = nn::grad_check(loss, params, 1e-5, 1e-4);
    double worst = 0.0;
    for (const auto& item : rep.items) worst = std::max(worst, item.rel_err);
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %s  worst_rel_err=%.3e\n", name.c_str(), rep.passed ? "pass" : "FAIL",
                  worst);
    result.log += line;
    if (!rep.passed) {
      result.passed = false;
      result.log += rep.summary();
    }
  }
};

}  // namespace

DetectorConfig toy_detector_config() {
  DetectorConfig dc;
  dc.image_size = 32;
  dc.classes = 2;
  dc.backbone_channels = {2, 4, 6, 8};
  dc.with_mixer = true;
  dc.mixer.channels = 6;
  dc.mixer.pattern = "MA";
  dc.mixer.allow_custom_pattern = true;
  dc.mixer.ssm_state = 2;
  dc.mixer.ssm_chunk = 64;
  dc.mixer.conv_kw = 3;
  dc.mixer.heads = 2;
  dc.mixer.agents = 2;
  dc.mixer.mlp_ratio = 2;
  dc.fpn_width = 4;
  dc.roi_grid = 2;
  dc.temb_dim = 4;
  dc.head_hidden = 8;
  dc.diffusion_T = 40;
  return dc;
}

GradSuiteResult run_gradient_suite(uint64_t seed) {
  Harness h;
  Rng rng(seed);

  // Core ops, five random instances each.
  for (int inst = 0; inst < 5; ++inst) {
    const std::string tag = "#" + std::to_string(inst);
    {
      Var x = Var::param(rand_t({3, 4}, rng), "x");
      Var w = Var::param(rand_t({4, 5}, rng), "W");
      Var b = Var::param(rand_t({5}, rng), "b");
      const Tensor r = rand_t({3, 5}, rng);
      h.check("linear" + tag, [&]() { return project(nn::linear(x, w, b), r); }, {x, w, b});
    }
    {
      Var x = Var::param(rand_t({2, 6}, rng, -2.0, 2.0), "x");
      const Tensor r = rand_t({2, 6}, rng);
      h.check("silu" + tag, [&]() { return project(nn::silu(x), r); }, {x});
      h.check("softplus" + tag, [&]() { return project(nn::softplus(x), r); }, {x});
    }
    {
      Var x = Var::param(rand_t({3, 5}, rng), "x");
      Var g = Var::param(rand_t({5}, rng, 0.5, 1.5), "gamma");
      Var b = Var::param(rand_t({5}, rng), "beta");
      const Tensor r = rand_t({3, 5}, rng);
      h.check("layer_norm" + tag, [&]() { return project(nn::layer_norm(x, g, b), r); }, {x, g, b});
    }
    {
      Var x = Var::param(rand_t({3, 4}, rng), "x");
      const Tensor r = rand_t({3, 4}, rng);
      h.check("softmax_rows" + tag, [&]() { return project(nn::softmax_rows(x), r); }, {x});
    }
    {
      Var x = Var::param(rand_t({2, 6, 6}, rng), "x");
      Var k = Var::param(rand_t({3, 2, 3, 3}, rng), "k");
      Var b = Var::param(rand_t({3}, rng), "b");
      const Tensor r1 = rand_t({3, 6, 6}, rng);
      h.check("conv2d_s1" + tag, [&]() { return project(nn::conv2d(x, k, b, 1, 1), r1); }, {x, k, b});
      Var k2 = Var::param(rand_t({3, 2, 2, 2}, rng), "k2");
      const Tensor r2 = rand_t({3, 3, 3}, rng);
      h.check("conv2d_s2" + tag, [&]() { return project(nn::conv2d(x, k2, b, 2, 0), r2); }, {x, k2, b});
    }
    {
      Var x = Var::param(rand_t({5, 3}, rng), "x");
      Var k = Var::param(rand_t({3, 3}, rng), "k");
      const Tensor r = rand_t({5, 3}, rng);
      h.check("conv1d_dw" + tag, [&]() { return project(nn::conv1d_depthwise(x, k, 1), r); }, {x, k});
    }
    {
      Rng init = rng.fork(100 + static_cast<uint64_t>(inst));
      ssm::SsmParams p = ssm::SsmParams::init(3, 2, init);
      Var u = Var::param(rand_t({6, 3}, rng), "u");
      const Tensor r = rand_t({6, 3}, rng);
      h.check("s6_scan" + tag, [&]() { return project(ssm::s6_scan(u, p), r); },
              {u, p.A_log, p.D, p.W_delta, p.b_delta, p.W_B, p.W_C});
    }
  }

  // Attention ops.
  {
    Var q = Var::param(rand_t({5, 4}, rng), "Q");
    Var k = Var::param(rand_t({6, 4}, rng), "K");
    Var v = Var::param(rand_t({6, 4}, rng), "V");
    const Tensor r = rand_t({5, 4}, rng);
    h.check("softmax_attention", [&]() { return project(attn::softmax_attention(q, k, v, 2), r); }, {q, k, v});
    h.check("agent_attention", [&]() {
      Var a = attn::agent_pool(q, 2);
      return project(attn::agent_attention(q, k, v, a, 2), r);
    }, {q, k, v});
  }

  // Mamba block, then the mixer with the stride-16 fusion (16x16 input).
  {
    ParamStore store;
    Rng init = rng.fork(12);
    mixer::MambaBlockParams mb = mixer::MambaBlockParams::init(4, 2, 3, 0, init, store, "mb");
    randomize_params(store, init);
    Var x = Var::param(rand_t({6, 4}, rng), "x");
    const Tensor r = rand_t({6, 4}, rng);
    std::vector<Var> params = store.all();
    params.push_back(x);
    h.check("mamba_block", [&]() { return project(mixer::mamba_block(x, 2, 3, mb), r); }, params);
  }
  {
    ParamStore store;
    Rng init = rng.fork(14);
    mixer::MixerConfig mc;
    mc.channels = 4;
    mc.pattern = "MA";
    mc.allow_custom_pattern = true;
    mc.ssm_state = 2;
    mc.conv_kw = 3;
    mc.heads = 2;
    mc.agents = 2;
    mc.mlp_ratio = 2;
    mixer::Mixer mx = mixer::Mixer::init(3, mc, init, store, "mixer");
    randomize_params(store, init, 0.3);
    Var res3 = Var::param(rand_t({3, 16, 16}, rng), "res3");
    Var res4 = Var::param(rand_t({4, 8, 8}, rng), "res4");
    const Tensor r = rand_t({4, 8, 8}, rng);
    std::vector<Var> params = store.all();
    params.push_back(res3);
    params.push_back(res4);
    h.check("fuse+mixer 16x16", [&]() { return project(net::fuse_res4(res4, mx.forward(res3)), r); }, params);
  }

  // Head over a small pyramid, through the training loss.
  {
    ParamStore store;
    Rng init = rng.fork(16);
    head::HeadConfig hc;
    hc.roi_grid = 2;
    hc.temb_dim = 4;
    hc.hidden = 8;
    hc.classes = 2;
    hc.fpn_width = 3;
    head::HeadParams hp = head::HeadParams::init(hc, init, store, "head");
    randomize_params(store, init);
    head::Pyramid fp;
    Var p3 = Var::param(rand_t({3, 8, 8}, rng), "p3");
    Var p4 = Var::param(rand_t({3, 4, 4}, rng), "p4");
    Var p5 = Var::param(rand_t({3, 2, 2}, rng), "p5");
    fp.p3 = p3;
    fp.p4 = p4;
    fp.p5 = p5;
    fp.image_h = 64;
    fp.image_w = 64;
    const Tensor z_t = rand_t({2, 4}, rng);
    const Tensor z0 = rand_t({2, 4}, rng);
    const std::vector<int> labels = {1, 2};
    const std::vector<uint8_t> mask = {1, 0};
    std::vector<Var> params = store.all();
    params.push_back(p3);
    params.push_back(p4);
    params.push_back(p5);
    h.check("head+loss", [&]() {
      const head::HeadOut out = head::head_forward(fp, z_t, 3, hp);
      return head::train_loss(out, z0, labels, mask);
    }, params);
  }

  // End-to-end toy pipeline: backbone -> fuse -> FPN -> head -> loss.
  {
    Detector det(toy_detector_config(), seed);
    Rng init = rng.fork(17);
    randomize_params(det.params(), init, 0.25);
    const Tensor image = rand_t({1, 32, 32}, rng, 0.0, 2.0);
    const Tensor z_t = rand_t({3, 4}, rng);
    const Tensor z0 = rand_t({3, 4}, rng);
    const std::vector<int> labels = {0, 1, 2};
    const std::vector<uint8_t> mask = {1, 1, 0};
    h.check("full pipeline", [&]() {
      const head::Pyramid fp = det.features(image);
      const head::HeadOut out = det.decode(fp, z_t, 5);
      return head::train_loss(out, z0, labels, mask);
    }, det.params().all());
  }

  return h.result;
}

}  // namespace sardet::suite
