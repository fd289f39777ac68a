// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/detector.hpp"

#include <cmath>

#include "sardet/nn.hpp"

namespace sardet {

void DetectorConfig::validate() const {
  if (image_size < 32 || image_size % 32 != 0) {
    throw ConfigError("image_size must be a positive multiple of 32, got " + std::to_string(image_size));
  }
  if (classes < 1) throw ConfigError("classes must be >= 1");
  if (with_mixer && mixer.channels != backbone_channels[2]) {
    throw ConfigError("mixer channels " + std::to_string(mixer.channels) + " must match the stride-16 width " +
                      std::to_string(backbone_channels[2]) + " for fusion");
  }
  mixer.validate();
  if (fpn_width < 1) throw ConfigError("fpn_width must be >= 1");
  if (roi_grid < 1) throw ConfigError("roi_grid must be >= 1");
  if (temb_dim < 2 || temb_dim % 2 != 0) throw ConfigError("temb_dim must be even and >= 2");
  if (head_hidden < 1) throw ConfigError("head_hidden must be >= 1");
  if (diffusion_T < 1) throw ConfigError("T must be >= 1");
  if (schedule_s <= 0.0) throw ConfigError("schedule_s must be > 0");
  if (signal_scale <= 0.0) throw ConfigError("signal_scale must be > 0");
}

Detector::Detector(DetectorConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  backbone_ = net::Backbone::init(cfg_.backbone_channels, rng, params_, "backbone");
  if (cfg_.with_mixer) {
    mixer_ = mixer::Mixer::init(cfg_.backbone_channels[1], cfg_.mixer, rng, params_, "mixer");
  }
  fpn_ = net::Fpn::init(cfg_.backbone_channels[1], cfg_.backbone_channels[2], cfg_.backbone_channels[3],
                        cfg_.fpn_width, rng, params_, "fpn");
  head::HeadConfig hc;
  hc.roi_grid = cfg_.roi_grid;
  hc.temb_dim = cfg_.temb_dim;
  hc.hidden = cfg_.head_hidden;
  hc.classes = cfg_.classes;
  hc.fpn_width = cfg_.fpn_width;
  hc.signal_scale = cfg_.signal_scale;
  hc.min_box_size = cfg_.min_box_size;
  head_ = head::HeadParams::init(hc, rng, params_, "head");
  sched_ = diffusion::build_schedule(cfg_.diffusion_T, cfg_.schedule_s, cfg_.signal_scale);
}

Tensor Detector::preprocess(const Tensor& image) {
  Tensor x(image.shape());
  for (int64_t i = 0; i < x.size(); ++i) x[i] = std::log1p(std::max(image[i], 0.0));
  const double mean = nn::mean_all(x);
  double var = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(x.size());
  const double inv = 1.0 / std::sqrt(var + 1e-8);
  for (int64_t i = 0; i < x.size(); ++i) x[i] = (x[i] - mean) * inv;
  return x;
}

head::Pyramid Detector::features(const Tensor& image) const {
  ag::Var img = ag::Var::leaf(preprocess(image));
  const net::Backbone::Out bb = backbone_.forward(img);
  ag::Var res4 = bb.res4;
  if (mixer_) res4 = net::fuse_res4(bb.res4, mixer_->forward(bb.res3));
  const net::Fpn::Out neck = fpn_.forward(bb.res3, res4, bb.res5);
  head::Pyramid fp;
  fp.p3 = neck.p3;
  fp.p4 = neck.p4;
  fp.p5 = neck.p5;
  fp.image_h = image.dim(1);
  fp.image_w = image.dim(2);
  return fp;
}

net::FeaturePyramid Detector::features_tensors(const Tensor& image) const {
  ag::NoGradGuard ng;
  const head::Pyramid fp = features(image);
  net::FeaturePyramid out;
  out[8] = fp.p3.val();
  out[16] = fp.p4.val();
  out[32] = fp.p5.val();
  return out;
}

head::HeadOut Detector::decode(const head::Pyramid& fp, const Tensor& z_t_scaled, int64_t t) const {
  return head::head_forward(fp, z_t_scaled, t, head_);
}

void scores_from_logits(const Tensor& logits, int64_t classes, std::vector<double>& scores,
                        std::vector<int>& labels) {
  const int64_t n = logits.dim(0), k1 = logits.dim(1);
  scores.assign(static_cast<size_t>(n), 0.0);
  labels.assign(static_cast<size_t>(n), 0);
  const Tensor probs = nn::softmax_rows(logits);
  for (int64_t i = 0; i < n; ++i) {
    double best = -1.0;
    int best_k = 0;
    double real_mass = 0.0;
    for (int64_t k = 0; k < std::min(classes, k1); ++k) {
      real_mass += probs[i * k1 + k];
      if (probs[i * k1 + k] > best) {
        best = probs[i * k1 + k];
        best_k = static_cast<int>(k);
      }
    }
    // Targetness is the mass on the real classes (1 - background); the
    // label is the most likely real class.
    scores[static_cast<size_t>(i)] = real_mass;
    labels[static_cast<size_t>(i)] = best_k;
  }
}

ModelDenoiser::ModelDenoiser(const Detector& det, const Tensor& image) : det_(det) {
  ag::NoGradGuard ng;
  fp_ = det_.features(image);
}

void ModelDenoiser::decode(const Tensor& z_t_scaled, int64_t t, Tensor& z0_hat, std::vector<double>& scores,
                           std::vector<int>& labels) const {
  ag::NoGradGuard ng;
  const head::HeadOut out = det_.decode(fp_, z_t_scaled, t);
  z0_hat = out.z0_hat.val();
  scores_from_logits(out.logits.val(), det_.config().classes, scores, labels);
}

}  // namespace sardet
