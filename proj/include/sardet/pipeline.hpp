// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sardet/config.hpp"
#include "sardet/detector.hpp"
#include "sardet/evalkit.hpp"
#include "sardet/synth.hpp"

namespace sardet::pipeline {

struct TrainStats {
  int64_t steps = 0;
  double final_box_loss = 0.0;
  double final_cls_loss = 0.0;
  double final_total = 0.0;
};

/// Single-image steps over the dataset in order, AdamW updates; optionally
/// writes the training log CSV (step,box_loss,cls_loss,total).
TrainStats train_detector(Detector& det, const std::vector<synth::SceneSample>& data, const Config& cfg,
                          std::ostream* log_csv);

struct EvalOutput {
  evalkit::Report report;
  std::vector<BoxSet> detections;  // per scene, NMS-kept
};

/// Runs the sampler on every scene (seed stream forked per scene index so
/// results are independent of worker count) and accumulates metrics.
EvalOutput evaluate_detector(const Detector& det, const std::vector<synth::SceneSample>& data, const Config& cfg);

void write_metrics_csv(std::ostream& os, const evalkit::Report& rep);
void write_detections_csv(std::ostream& os, const std::vector<std::string>& image_ids,
                          const std::vector<BoxSet>& dets);

}  // namespace sardet::pipeline
