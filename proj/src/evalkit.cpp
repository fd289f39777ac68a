// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sardet::evalkit {

double iou(const Box& a, const Box& b) {
  const double ax0 = a[0] - a[2] / 2.0, ax1 = a[0] + a[2] / 2.0;
  const double ay0 = a[1] - a[3] / 2.0, ay1 = a[1] + a[3] / 2.0;
  const double bx0 = b[0] - b[2] / 2.0, bx1 = b[0] + b[2] / 2.0;
  const double by0 = b[1] - b[3] / 2.0, by1 = b[1] + b[3] / 2.0;
  const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = ix * iy;
  const double uni = a[2] * a[3] + b[2] * b[3] - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

Box box_row(const Tensor& t, int64_t i) { return {t[i * 4], t[i * 4 + 1], t[i * 4 + 2], t[i * 4 + 3]}; }

}  // namespace

MatchResult match_detections(const BoxSet& dets, const BoxSet& gts, double iou_thresh) {
  MatchResult r;
  r.det_tp.assign(static_cast<size_t>(dets.size()), 0);
  r.gt_matched.assign(static_cast<size_t>(gts.size()), 0);
  for (int64_t d = 0; d < dets.size(); ++d) {
    double best = 0.0;
    int64_t best_g = -1;
    for (int64_t g = 0; g < gts.size(); ++g) {
      if (r.gt_matched[static_cast<size_t>(g)]) continue;
      if (gts.labels[static_cast<size_t>(g)] != dets.labels[static_cast<size_t>(d)]) continue;
      const double v = iou(box_row(dets.boxes, d), box_row(gts.boxes, g));
      if (v >= iou_thresh && v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best_g >= 0) {
      r.det_tp[static_cast<size_t>(d)] = 1;
      r.gt_matched[static_cast<size_t>(best_g)] = 1;
    }
  }
  return r;
}

double average_precision(std::vector<std::pair<double, uint8_t>> scored_tp, int64_t n_gt) {
  if (n_gt <= 0) return 0.0;
  if (scored_tp.empty()) return 0.0;
  std::stable_sort(scored_tp.begin(), scored_tp.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const size_t n = scored_tp.size();
  std::vector<double> prec(n), rec(n);
  int64_t tp = 0;
  for (size_t i = 0; i < n; ++i) {
    tp += scored_tp[i].second ? 1 : 0;
    prec[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    rec[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  // Precision envelope from the right, then sum over recall increments.
  for (size_t i = n - 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
  double ap = 0.0;
  double prev_rec = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ap += (rec[i] - prev_rec) * prec[i];
    prev_rec = rec[i];
  }
  return ap;
}

void Evaluator::add_image(const BoxSet& dets, const BoxSet& gts) { images_.push_back({dets, gts}); }

namespace {

// Detections of one class from one image, sorted by descending score with
// ties broken by original index.
BoxSet select_class_sorted(const BoxSet& dets, int cls, double conf) {
  std::vector<int64_t> idx;
  for (int64_t i = 0; i < dets.size(); ++i) {
    if (dets.labels[static_cast<size_t>(i)] == cls && dets.scores[static_cast<size_t>(i)] >= conf) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) {
    if (dets.scores[static_cast<size_t>(a)] != dets.scores[static_cast<size_t>(b)]) {
      return dets.scores[static_cast<size_t>(a)] > dets.scores[static_cast<size_t>(b)];
    }
    return a < b;
  });
  BoxSet out;
  if (idx.empty()) return out;
  out.boxes = Tensor({static_cast<int64_t>(idx.size()), 4});
  for (size_t i = 0; i < idx.size(); ++i) {
    for (int64_t j = 0; j < 4; ++j) out.boxes[static_cast<int64_t>(i) * 4 + j] = dets.boxes[idx[i] * 4 + j];
    out.labels.push_back(cls);
    out.scores.push_back(dets.scores[static_cast<size_t>(idx[i])]);
  }
  return out;
}

BoxSet select_class_gt(const BoxSet& gts, int cls) {
  std::vector<int64_t> idx;
  for (int64_t i = 0; i < gts.size(); ++i) {
    if (gts.labels[static_cast<size_t>(i)] == cls) idx.push_back(i);
  }
  BoxSet out;
  if (idx.empty()) return out;
  out.boxes = Tensor({static_cast<int64_t>(idx.size()), 4});
  for (size_t i = 0; i < idx.size(); ++i) {
    for (int64_t j = 0; j < 4; ++j) out.boxes[static_cast<int64_t>(i) * 4 + j] = gts.boxes[idx[i] * 4 + j];
    out.labels.push_back(cls);
  }
  return out;
}

}  // namespace

double Evaluator::class_ap(int cls, double iou_thresh, int64_t* n_gt_out) const {
  std::vector<std::pair<double, uint8_t>> scored;
  int64_t n_gt = 0;
  for (const ImageRecord& im : images_) {
    const BoxSet gts = select_class_gt(im.gts, cls);
    n_gt += gts.size();
    const BoxSet dets = select_class_sorted(im.dets, cls, 0.0);
    const MatchResult m = match_detections(dets, gts, iou_thresh);
    for (int64_t d = 0; d < dets.size(); ++d) {
      scored.emplace_back(dets.scores[static_cast<size_t>(d)], m.det_tp[static_cast<size_t>(d)]);
    }
  }
  if (n_gt_out) *n_gt_out = n_gt;
  return average_precision(std::move(scored), n_gt);
}

double Evaluator::mean_ap(double iou_thresh) const {
  double sum = 0.0;
  int present = 0;
  for (int cls = 0; cls < classes_; ++cls) {
    int64_t n_gt = 0;
    const double ap = class_ap(cls, iou_thresh, &n_gt);
    if (n_gt > 0) {
      sum += ap;
      ++present;
    }
  }
  return present > 0 ? sum / present : 0.0;
}

Report Evaluator::finalize(double conf) const {
  Report rep;
  int64_t pooled_tp = 0, pooled_fp = 0, pooled_gt = 0;
  int present = 0;
  for (int cls = 0; cls < classes_; ++cls) {
    ClassReport cr;
    cr.cls = cls;
    cr.ap50 = class_ap(cls, 0.5, &cr.n_gt);
    cr.ap75 = class_ap(cls, 0.75, nullptr);
    int64_t tp = 0, fp = 0;
    for (const ImageRecord& im : images_) {
      const BoxSet gts = select_class_gt(im.gts, cls);
      const BoxSet dets = select_class_sorted(im.dets, cls, conf);
      const MatchResult m = match_detections(dets, gts, 0.5);
      for (uint8_t v : m.det_tp) (v ? tp : fp) += 1;
    }
    cr.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    cr.recall = cr.n_gt > 0 ? static_cast<double>(tp) / static_cast<double>(cr.n_gt) : 0.0;
    cr.f1 = cr.precision + cr.recall > 0.0 ? 2.0 * cr.precision * cr.recall / (cr.precision + cr.recall) : 0.0;
    pooled_tp += tp;
    pooled_fp += fp;
    pooled_gt += cr.n_gt;
    if (cr.n_gt > 0) {
      rep.map50 += cr.ap50;
      rep.map75 += cr.ap75;
      ++present;
    } else {
      rep.warnings.push_back("class " + std::to_string(cls) + " has no ground-truth instances; excluded from mAP");
    }
    rep.per_class.push_back(cr);
  }
  if (present > 0) {
    rep.map50 /= present;
    rep.map75 /= present;
  }
  rep.precision = pooled_tp + pooled_fp > 0 ? static_cast<double>(pooled_tp) / static_cast<double>(pooled_tp + pooled_fp) : 0.0;
  rep.recall = pooled_gt > 0 ? static_cast<double>(pooled_tp) / static_cast<double>(pooled_gt) : 0.0;
  rep.f1 = rep.precision + rep.recall > 0.0 ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall) : 0.0;
  return rep;
}

}  // namespace sardet::evalkit
