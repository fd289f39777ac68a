// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "sardet/diffusion.hpp"
#include "sardet/head.hpp"
#include "sardet/mixer.hpp"
#include "sardet/net.hpp"
#include "sardet/params.hpp"

namespace sardet {

struct DetectorConfig {
  int64_t image_size = 128;
  int64_t classes = 3;
  std::array<int64_t, 4> backbone_channels{32, 64, 128, 256};
  bool with_mixer = true;
  mixer::MixerConfig mixer;  // mixer.channels must equal backbone_channels[2]
  int64_t fpn_width = 64;
  int64_t roi_grid = 3;
  int64_t temb_dim = 64;
  int64_t head_hidden = 256;
  int64_t diffusion_T = 1000;
  double schedule_s = 0.008;
  double signal_scale = 2.0;
  double min_box_size = 1e-3;

  void validate() const;
};

/// Noise-to-box detector: tiny conv stem, optional hybrid mixer fused into
/// the stride-16 stage, feature pyramid neck, and the box/class decode head.
class Detector {
 public:
  Detector(DetectorConfig cfg, uint64_t seed);

  const DetectorConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const diffusion::Schedule& schedule() const { return sched_; }

  /// log1p + per-image standardization; keeps the zero image at zero.
  static Tensor preprocess(const Tensor& image);

  /// Full feature path: preprocess -> backbone -> (mixer fusion) -> FPN.
  head::Pyramid features(const Tensor& image) const;
  net::FeaturePyramid features_tensors(const Tensor& image) const;

  head::HeadOut decode(const head::Pyramid& fp, const Tensor& z_t_scaled, int64_t t) const;

  const net::Backbone& backbone() const { return backbone_; }
  const mixer::Mixer* mixer_module() const { return mixer_ ? &*mixer_ : nullptr; }
  const net::Fpn& fpn() const { return fpn_; }
  const head::HeadParams& head_params() const { return head_; }

 private:
  DetectorConfig cfg_;
  ParamStore params_;
  net::Backbone backbone_;
  std::optional<mixer::Mixer> mixer_;
  net::Fpn fpn_;
  head::HeadParams head_;
  diffusion::Schedule sched_;
};

/// Denoiser backed by a detector; the pyramid is computed once per image.
class ModelDenoiser : public diffusion::Denoiser {
 public:
  ModelDenoiser(const Detector& det, const Tensor& image);

  void decode(const Tensor& z_t_scaled, int64_t t, Tensor& z0_hat, std::vector<double>& scores,
              std::vector<int>& labels) const override;

 private:
  const Detector& det_;
  head::Pyramid fp_;
};

/// Class scores from logits over K real classes + background: per row the
/// label is the argmax real class and the score its softmax probability.
void scores_from_logits(const Tensor& logits, int64_t classes, std::vector<double>& scores,
                        std::vector<int>& labels);

}  // namespace sardet
