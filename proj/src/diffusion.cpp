// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sardet/evalkit.hpp"

namespace sardet::diffusion {

Schedule build_schedule(int64_t T, double s, double signal_scale) {
  if (T < 1) throw ConfigError("schedule: T must be >= 1");
  if (s <= 0.0) throw ConfigError("schedule: s must be > 0");
  Schedule sched;
  sched.T = T;
  sched.signal_scale = signal_scale;
  sched.alpha.assign(static_cast<size_t>(T + 1), 1.0);
  sched.alpha_bar.assign(static_cast<size_t>(T + 1), 1.0);
  auto f = [T, s](int64_t t) {
    const double x = ((static_cast<double>(t) / static_cast<double>(T) + s) / (1.0 + s)) * std::numbers::pi / 2.0;
    const double c = std::cos(x);
    return c * c;
  };
  const double f0 = f(0);
  double prev = 1.0;
  for (int64_t t = 1; t <= T; ++t) {
    const double ab = f(t) / f0;
    double a = ab / prev;
    a = std::clamp(a, 0.001, 0.9999999);
    sched.alpha[static_cast<size_t>(t)] = a;
    sched.alpha_bar[static_cast<size_t>(t)] = sched.alpha_bar[static_cast<size_t>(t - 1)] * a;
    prev = ab;
  }
  return sched;
}

Tensor scale_boxes(const Tensor& boxes01, double scale) {
  Tensor z(boxes01.shape());
  for (int64_t i = 0; i < boxes01.size(); ++i) z[i] = scale * (2.0 * boxes01[i] - 1.0);
  return z;
}

Tensor unscale_boxes(const Tensor& z, double scale, double min_size) {
  if (z.rank() != 2 || z.dim(1) != 4) throw DimError("unscale_boxes: expected [N,4], got " + shape_str(z.shape()));
  Tensor b(z.shape());
  for (int64_t i = 0; i < z.dim(0); ++i) {
    for (int64_t j = 0; j < 4; ++j) {
      const double v = (z[i * 4 + j] / scale + 1.0) / 2.0;
      b[i * 4 + j] = j < 2 ? std::clamp(v, 0.0, 1.0) : std::clamp(v, min_size, 1.0);
    }
  }
  return b;
}

Tensor corrupt_boxes(const Tensor& z0_scaled, int64_t t, const Schedule& sched, Rng& rng) {
  if (t < 0 || t > sched.T) {
    throw ConfigError("corrupt_boxes: t = " + std::to_string(t) + " outside [0, " + std::to_string(sched.T) + "]");
  }
  const double ab = sched.alpha_bar[static_cast<size_t>(t)];
  const double sig = std::sqrt(1.0 - ab);
  const double mu = std::sqrt(ab);
  Tensor z(z0_scaled.shape());
  for (int64_t i = 0; i < z.size(); ++i) z[i] = mu * z0_scaled[i] + sig * rng.normal();
  return z;
}

PaddedBoxes pad_gt_boxes(const BoxSet& gt, int64_t n_train, int background_label, const Schedule& sched, Rng& rng) {
  if (n_train < 1) throw ConfigError("pad_gt_boxes: n_train must be >= 1");
  PaddedBoxes out;
  out.boxes01 = Tensor({n_train, 4});
  out.labels.assign(static_cast<size_t>(n_train), background_label);
  out.gt_mask.assign(static_cast<size_t>(n_train), 0);
  const int64_t n_gt = gt.size();
  out.truncated = n_gt > n_train;
  const int64_t keep = std::min(n_gt, n_train);
  for (int64_t i = 0; i < keep; ++i) {
    for (int64_t j = 0; j < 4; ++j) out.boxes01[i * 4 + j] = gt.boxes[i * 4 + j];
    out.labels[static_cast<size_t>(i)] = gt.labels[static_cast<size_t>(i)];
    out.gt_mask[static_cast<size_t>(i)] = 1;
  }
  for (int64_t i = keep; i < n_train; ++i) {
    // Standard-normal in scaled space, mapped back to [0,1] coordinates.
    for (int64_t j = 0; j < 4; ++j) {
      const double z = rng.normal();
      const double v = (z / sched.signal_scale + 1.0) / 2.0;
      out.boxes01[i * 4 + j] = j < 2 ? std::clamp(v, 0.0, 1.0) : std::clamp(v, 1e-3, 1.0);
    }
  }
  return out;
}

Tensor ddim_step(const Tensor& z_t, const Tensor& z0_hat, int64_t t, int64_t t_next, const Schedule& sched) {
  require_same_shape(z_t, z0_hat, "ddim_step");
  if (t_next >= t || t_next < 0 || t > sched.T) {
    throw ConfigError("ddim_step: need 0 <= t_next < t <= T, got t=" + std::to_string(t) +
                      " t_next=" + std::to_string(t_next));
  }
  const double ab_t = sched.alpha_bar[static_cast<size_t>(t)];
  const double ab_n = sched.alpha_bar[static_cast<size_t>(t_next)];
  const double sq_t = std::sqrt(ab_t), sq_n = std::sqrt(ab_n);
  const double sig_t = std::sqrt(1.0 - ab_t), sig_n = std::sqrt(1.0 - ab_n);
  Tensor z(z_t.shape());
  for (int64_t i = 0; i < z.size(); ++i) {
    const double eps_hat = sig_t > 0.0 ? (z_t[i] - sq_t * z0_hat[i]) / sig_t : 0.0;
    z[i] = sq_n * z0_hat[i] + sig_n * eps_hat;
  }
  return z;
}

void box_renewal(Tensor& z_scaled, const std::vector<double>& scores, double thresh, Rng& rng) {
  if (thresh < 0.0 || thresh > 1.0) throw ConfigError("box_renewal: thresh must lie in [0,1]");
  const int64_t n = z_scaled.dim(0);
  if (static_cast<int64_t>(scores.size()) != n) throw DimError("box_renewal: score count mismatch");
  for (int64_t i = 0; i < n; ++i) {
    if (scores[static_cast<size_t>(i)] >= thresh) continue;
    for (int64_t j = 0; j < 4; ++j) z_scaled[i * 4 + j] = rng.normal();
  }
}

std::vector<int64_t> nms(const Tensor& boxes01, const std::vector<double>& scores, const std::vector<int>& labels,
                         double iou_thresh) {
  if (iou_thresh <= 0.0 || iou_thresh >= 1.0) throw ConfigError("nms: iou_thresh must lie in (0,1)");
  const int64_t n = boxes01.empty() ? 0 : boxes01.dim(0);
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)]) {
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    }
    return a < b;
  });
  std::vector<int64_t> keep;
  for (int64_t cand : order) {
    bool suppressed = false;
    for (int64_t k : keep) {
      if (labels[static_cast<size_t>(k)] != labels[static_cast<size_t>(cand)]) continue;
      const double iou = evalkit::iou({boxes01[cand * 4], boxes01[cand * 4 + 1], boxes01[cand * 4 + 2],
                                       boxes01[cand * 4 + 3]},
                                      {boxes01[k * 4], boxes01[k * 4 + 1], boxes01[k * 4 + 2], boxes01[k * 4 + 3]});
      if (iou >= iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) keep.push_back(cand);
  }
  return keep;
}

BoxSet sample(const Denoiser& denoiser, int64_t n_boxes, const std::vector<int64_t>& steps, const Schedule& sched,
              Rng& rng, const SampleConfig& cfg) {
  if (n_boxes < 1) throw ConfigError("sample: need at least one proposal box");
  if (steps.empty()) throw ConfigError("sample: empty step list");
  for (size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] < 1 || steps[i] > sched.T) throw ConfigError("sample: step outside [1, T]");
    if (i > 0 && steps[i] >= steps[i - 1]) throw ConfigError("sample: steps must be strictly decreasing");
  }

  Tensor z({n_boxes, 4});
  for (int64_t i = 0; i < z.size(); ++i) z[i] = rng.normal();

  Tensor z0_hat;
  std::vector<double> scores;
  std::vector<int> labels;
  for (size_t si = 0; si < steps.size(); ++si) {
    const int64_t t = steps[si];
    const bool last = si + 1 == steps.size();
    const int64_t t_next = last ? 0 : steps[si + 1];
    denoiser.decode(z, t, z0_hat, scores, labels);
    z = ddim_step(z, z0_hat, t, t_next, sched);
    // Renewal re-seeds proposals for the next decode; after the final decode
    // there is none, so surviving estimates are reported as-is.
    if (!last) box_renewal(z, scores, cfg.renewal_thresh, rng);
  }

  BoxSet out;
  out.boxes = unscale_boxes(z, sched.signal_scale, cfg.min_box_size);
  out.labels = labels;
  out.scores = scores;
  const auto keep = nms(out.boxes, out.scores, out.labels, cfg.nms_iou);
  BoxSet kept;
  if (!keep.empty()) {
    kept.boxes = Tensor({static_cast<int64_t>(keep.size()), 4});
    for (size_t i = 0; i < keep.size(); ++i) {
      for (int64_t j = 0; j < 4; ++j) kept.boxes[static_cast<int64_t>(i) * 4 + j] = out.boxes[keep[i] * 4 + j];
      kept.labels.push_back(out.labels[static_cast<size_t>(keep[i])]);
      kept.scores.push_back(out.scores[static_cast<size_t>(keep[i])]);
    }
  }
  return kept;
}

}  // namespace sardet::diffusion
