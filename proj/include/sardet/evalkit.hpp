// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sardet/boxes.hpp"

namespace sardet::evalkit {

using Box = std::array<double, 4>;  // (cx, cy, w, h)

/// Intersection over union in axis-aligned corner space.
double iou(const Box& a, const Box& b);

struct MatchResult {
  std::vector<uint8_t> det_tp;      // per detection, in the given order
  std::vector<uint8_t> gt_matched;  // per ground-truth box
};

/// Greedy matching: detections are consumed in the given (descending-score)
/// order; each matches the highest-IoU unmatched same-class ground truth
/// with IoU >= iou_thresh. One match per ground truth.
MatchResult match_detections(const BoxSet& dets, const BoxSet& gts, double iou_thresh);

/// All-point interpolated area under the precision-recall curve.
/// scored_tp holds (score, tp) pairs in any order; n_gt is the positive count.
double average_precision(std::vector<std::pair<double, uint8_t>> scored_tp, int64_t n_gt);

struct ClassReport {
  int cls = 0;
  int64_t n_gt = 0;
  double ap50 = 0.0, ap75 = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct Report {
  std::vector<ClassReport> per_class;
  double map50 = 0.0, map75 = 0.0;         // means over classes with ground truth
  double precision = 0.0, recall = 0.0, f1 = 0.0;  // pooled over classes
  std::vector<std::string> warnings;
};

/// Dataset-level accumulator with deterministic reduction order.
class Evaluator {
 public:
  explicit Evaluator(int classes) : classes_(classes) {}

  void add_image(const BoxSet& dets, const BoxSet& gts);
  Report finalize(double conf = 0.5) const;
  /// Mean AP over classes with ground truth at the given IoU threshold.
  double mean_ap(double iou_thresh) const;

 private:
  struct ImageRecord {
    BoxSet dets, gts;
  };
  double class_ap(int cls, double iou_thresh, int64_t* n_gt_out) const;
  std::vector<ImageRecord> images_;
  int classes_;
};

}  // namespace sardet::evalkit
