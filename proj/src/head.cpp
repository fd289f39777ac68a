// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/head.hpp"

#include <algorithm>
#include <cmath>

#include "sardet/diffusion.hpp"
#include "sardet/nn.hpp"

namespace sardet::head {

Tensor time_embed(int64_t t, int64_t dim) {
  if (dim < 2 || dim % 2 != 0) throw ConfigError("time_embed: dim must be even, got " + std::to_string(dim));
  Tensor e({dim});
  const double half = static_cast<double>(dim) / 2.0;
  for (int64_t i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
    e[2 * i] = std::sin(static_cast<double>(t) * freq);
    e[2 * i + 1] = std::cos(static_cast<double>(t) * freq);
  }
  return e;
}

int assign_level(double w, double h, int64_t img_h, int64_t img_w, int64_t k0, double canonical) {
  const double area = w * h * static_cast<double>(img_h) * static_cast<double>(img_w);
  const double k = static_cast<double>(k0) + std::log2(std::sqrt(std::max(area, 1e-12)) / canonical);
  return static_cast<int>(std::clamp(std::floor(k), 3.0, 5.0));
}

namespace {

struct BilinearSample {
  int64_t x0, x1, y0, y1;
  double w00, w01, w10, w11;
};

BilinearSample bilinear_at(double px, double py, int64_t W, int64_t H) {
  px = std::clamp(px, 0.0, static_cast<double>(W - 1));
  py = std::clamp(py, 0.0, static_cast<double>(H - 1));
  BilinearSample s;
  s.x0 = static_cast<int64_t>(std::floor(px));
  s.y0 = static_cast<int64_t>(std::floor(py));
  s.x1 = std::min(s.x0 + 1, W - 1);
  s.y1 = std::min(s.y0 + 1, H - 1);
  const double fx = px - static_cast<double>(s.x0);
  const double fy = py - static_cast<double>(s.y0);
  s.w00 = (1.0 - fy) * (1.0 - fx);
  s.w01 = (1.0 - fy) * fx;
  s.w10 = fy * (1.0 - fx);
  s.w11 = fy * fx;
  return s;
}

}  // namespace

Var roi_pool_level(const Var& level, double cx, double cy, double w, double h, int64_t G) {
  if (level.rank() != 3) throw DimError("roi_pool: expected feature [C,H,W]");
  if (G < 1) throw ConfigError("roi_pool: grid size must be >= 1");
  const int64_t C = level.dim(0), Hl = level.dim(1), Wl = level.dim(2);
  std::vector<BilinearSample> samples;
  samples.reserve(static_cast<size_t>(G * G));
  for (int64_t gy = 0; gy < G; ++gy) {
    for (int64_t gx = 0; gx < G; ++gx) {
      const double u = cx - w / 2.0 + (static_cast<double>(gx) + 0.5) * w / static_cast<double>(G);
      const double v = cy - h / 2.0 + (static_cast<double>(gy) + 0.5) * h / static_cast<double>(G);
      samples.push_back(bilinear_at(u * static_cast<double>(Wl) - 0.5, v * static_cast<double>(Hl) - 0.5, Wl, Hl));
    }
  }
  Tensor out({G * G * C});
  const Tensor& f = level.val();
  for (size_t si = 0; si < samples.size(); ++si) {
    const BilinearSample& s = samples[si];
    double* orow = out.data() + static_cast<int64_t>(si) * C;
    for (int64_t c = 0; c < C; ++c) {
      const double* fc = f.data() + c * Hl * Wl;
      orow[c] = s.w00 * fc[s.y0 * Wl + s.x0] + s.w01 * fc[s.y0 * Wl + s.x1] + s.w10 * fc[s.y1 * Wl + s.x0] +
                s.w11 * fc[s.y1 * Wl + s.x1];
    }
  }
  return ag::make_op(std::move(out), {level}, [samples = std::move(samples), C, Hl, Wl](ag::Node& n) {
    Tensor& df = n.parents[0]->ensure_grad();
    for (size_t si = 0; si < samples.size(); ++si) {
      const BilinearSample& s = samples[si];
      const double* grow = n.grad.data() + static_cast<int64_t>(si) * C;
      for (int64_t c = 0; c < C; ++c) {
        double* dfc = df.data() + c * Hl * Wl;
        dfc[s.y0 * Wl + s.x0] += s.w00 * grow[c];
        dfc[s.y0 * Wl + s.x1] += s.w01 * grow[c];
        dfc[s.y1 * Wl + s.x0] += s.w10 * grow[c];
        dfc[s.y1 * Wl + s.x1] += s.w11 * grow[c];
      }
    }
  });
}

Tensor roi_pool(const net::FeaturePyramid& fp, double cx, double cy, double w, double h, int64_t G, int64_t k0,
                double canonical) {
  if (fp.empty()) throw ConfigError("roi_pool: empty feature pyramid");
  auto it8 = fp.find(8);
  if (it8 == fp.end()) throw ConfigError("roi_pool: pyramid missing stride-8 level");
  const int64_t img_h = it8->second.dim(1) * 8;
  const int64_t img_w = it8->second.dim(2) * 8;
  const int level = assign_level(w, h, img_h, img_w, k0, canonical);
  const int64_t stride = int64_t{1} << level;
  auto it = fp.find(stride);
  if (it == fp.end()) throw ConfigError("roi_pool: pyramid missing stride-" + std::to_string(stride) + " level");
  ag::NoGradGuard ng;
  const int64_t C = it->second.dim(0);
  return roi_pool_level(ag::Var::leaf(it->second), cx, cy, w, h, G).val().reshaped({G, G, C});
}

HeadParams HeadParams::init(const HeadConfig& cfg, Rng& rng, ParamStore& store, const std::string& prefix) {
  HeadParams p;
  p.cfg = cfg;
  const int64_t in = cfg.roi_grid * cfg.roi_grid * cfg.fpn_width + cfg.temb_dim + 4;
  p.w1 = store.add(prefix + ".w1", nn::xavier_uniform({in, cfg.hidden}, rng));
  p.b1 = store.add(prefix + ".b1", Tensor::zeros({cfg.hidden}));
  p.w2 = store.add(prefix + ".w2", nn::xavier_uniform({cfg.hidden, cfg.hidden}, rng));
  p.b2 = store.add(prefix + ".b2", Tensor::zeros({cfg.hidden}));
  p.w_box = store.add(prefix + ".w_box", nn::xavier_uniform({cfg.hidden, 4}, rng));
  p.b_box = store.add(prefix + ".b_box", Tensor::zeros({4}));
  p.w_cls = store.add(prefix + ".w_cls", nn::xavier_uniform({cfg.hidden, cfg.classes + 1}, rng));
  p.b_cls = store.add(prefix + ".b_cls", Tensor::zeros({cfg.classes + 1}));
  return p;
}

HeadOut head_forward(const Pyramid& fp, const Tensor& z_t_scaled, int64_t t, const HeadParams& p) {
  if (z_t_scaled.rank() != 2 || z_t_scaled.dim(1) != 4) {
    throw DimError("head_forward: expected boxes [N,4], got " + shape_str(z_t_scaled.shape()));
  }
  const int64_t n = z_t_scaled.dim(0);
  const int64_t G = p.cfg.roi_grid;
  const Tensor boxes01 = diffusion::unscale_boxes(z_t_scaled, p.cfg.signal_scale, p.cfg.min_box_size);

  std::vector<Var> roi_rows;
  roi_rows.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double cx = boxes01[i * 4], cy = boxes01[i * 4 + 1];
    const double w = boxes01[i * 4 + 2], h = boxes01[i * 4 + 3];
    const int level = assign_level(w, h, fp.image_h, fp.image_w, p.cfg.k0, p.cfg.canonical_scale);
    const Var& feat = level == 3 ? fp.p3 : (level == 4 ? fp.p4 : fp.p5);
    roi_rows.push_back(roi_pool_level(feat, cx, cy, w, h, G));
  }
  Var roi = nn::stack_rows(roi_rows);  // [N, G*G*C]

  const Tensor temb1 = time_embed(t, p.cfg.temb_dim);
  Tensor temb({n, p.cfg.temb_dim});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < p.cfg.temb_dim; ++j) temb[i * p.cfg.temb_dim + j] = temb1[j];
  }

  Var x = nn::concat_cols(nn::concat_cols(roi, ag::Var::leaf(std::move(temb))), ag::Var::leaf(z_t_scaled));
  Var hidden = nn::silu(nn::linear(x, p.w1, p.b1));
  hidden = nn::silu(nn::linear(hidden, p.w2, p.b2));
  HeadOut out;
  out.z0_hat = nn::linear(hidden, p.w_box, p.b_box);
  out.logits = nn::linear(hidden, p.w_cls, p.b_cls);
  return out;
}

Var train_loss(const HeadOut& out, const Tensor& z0_true_scaled, const std::vector<int>& labels,
               const std::vector<uint8_t>& origin_mask, double lambda) {
  Var box_term = nn::masked_sqnorm_mean(out.z0_hat, z0_true_scaled, origin_mask);
  Var ce = nn::cross_entropy_mean(out.logits, labels);
  return nn::add(box_term, nn::scale(ce, lambda));
}

}  // namespace sardet::head
