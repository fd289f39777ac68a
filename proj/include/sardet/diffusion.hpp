// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <vector>

#include "sardet/boxes.hpp"
#include "sardet/rng.hpp"
#include "sardet/tensor.hpp"

namespace sardet::diffusion {

/// Cosine noise schedule. alpha_bar[t] is the cumulative product of the
/// per-step retention factors alpha[1..t]; alpha_bar[0] == 1 exactly.
struct Schedule {
  int64_t T = 1000;
  std::vector<double> alpha;      // size T+1; alpha[0] unused (= 1)
  std::vector<double> alpha_bar;  // size T+1
  double signal_scale = 2.0;
};

/// alpha_bar_t = f(t)/f(0) with f(t) = cos^2(((t/T + s)/(1+s)) * pi/2),
/// per-step alpha clipped to >= 0.001 and alpha_bar rebuilt as the running
/// product of the clipped steps.
Schedule build_schedule(int64_t T, double s, double signal_scale = 2.0);

/// Affine map [0,1] -> [-scale, +scale] applied to every coordinate, and its
/// inverse with clamping (cx,cy to [0,1]; w,h to [min_size, 1]).
Tensor scale_boxes(const Tensor& boxes01, double scale);
Tensor unscale_boxes(const Tensor& z, double scale, double min_size);

/// Forward corruption in scaled space: z_t = sqrt(ab_t) z0 + sqrt(1-ab_t) eps.
Tensor corrupt_boxes(const Tensor& z0_scaled, int64_t t, const Schedule& sched, Rng& rng);

struct PaddedBoxes {
  Tensor boxes01;              // [N,4], ground truth rows first
  std::vector<int> labels;     // background id for padded rows
  std::vector<uint8_t> gt_mask;
  bool truncated = false;
};

/// Pads (or truncates, with a flag) the ground-truth set to exactly n_train
/// rows; padded rows are standard-normal draws in scaled space mapped back.
PaddedBoxes pad_gt_boxes(const BoxSet& gt, int64_t n_train, int background_label, const Schedule& sched, Rng& rng);

/// Deterministic reverse update (eta = 0):
/// eps_hat = (z_t - sqrt(ab_t) z0_hat) / sqrt(1-ab_t);
/// z_next  = sqrt(ab_next) z0_hat + sqrt(1-ab_next) eps_hat.
Tensor ddim_step(const Tensor& z_t, const Tensor& z0_hat, int64_t t, int64_t t_next, const Schedule& sched);

/// Replaces rows with score < thresh by fresh standard-normal boxes (scaled
/// space); surviving rows are untouched.
void box_renewal(Tensor& z_scaled, const std::vector<double>& scores, double thresh, Rng& rng);

/// Greedy descending-score suppression, class-aware; ties broken by lower
/// index. Returns kept row indices in keep order.
std::vector<int64_t> nms(const Tensor& boxes01, const std::vector<double>& scores, const std::vector<int>& labels,
                         double iou_thresh);

/// Decoder interface for the sampler: maps (z_t scaled, t) to a z0 estimate
/// plus per-row scores and labels.
struct Denoiser {
  virtual ~Denoiser() = default;
  virtual void decode(const Tensor& z_t_scaled, int64_t t, Tensor& z0_hat, std::vector<double>& scores,
                      std::vector<int>& labels) const = 0;
};

struct SampleConfig {
  double renewal_thresh = 0.5;
  double nms_iou = 0.5;
  double min_box_size = 1e-3;
};

/// Noise-to-box sampling: z ~ N(0,I); per step decode -> ddim_step ->
/// box_renewal; afterwards clamp to [0,1] with the size floor, then NMS.
/// `steps` must be strictly decreasing values in [1, T].
BoxSet sample(const Denoiser& denoiser, int64_t n_boxes, const std::vector<int64_t>& steps, const Schedule& sched,
              Rng& rng, const SampleConfig& cfg = {});

}  // namespace sardet::diffusion
