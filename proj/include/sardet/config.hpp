// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sardet/detector.hpp"

namespace sardet {

/// Plain-text run configuration: `key = value` lines, `#` comments.
/// Unknown keys are errors.
struct Config {
  uint64_t seed = 0;
  int64_t image_size = 128;
  int64_t classes = 3;

  int64_t T = 1000;
  double schedule_s = 0.008;
  double signal_scale = 2.0;

  int64_t proposals = 64;        // sampling box count N
  int64_t train_proposals = 16;  // padded box count during training
  std::vector<int64_t> steps = {1000};  // sampling t values, strictly decreasing
  double renewal_thresh = 0.5;
  double nms_iou = 0.5;
  double min_box_size = 1e-3;
  double confidence = 0.5;

  int64_t agent_n = 16;
  int64_t heads = 4;
  int64_t ssm_state = 16;
  int64_t ssm_chunk = 64;
  int64_t conv_kw = 3;
  int64_t mixer_channels = 128;
  std::string mixer_pattern = "MMMAAA";
  bool allow_custom_pattern = false;
  int64_t mlp_ratio = 4;
  bool with_mixer = true;

  int64_t fpn_channels = 64;
  int64_t roi_grid = 3;
  int64_t temb_dim = 64;
  int64_t head_hidden = 256;

  double lr = 1.5e-5;
  double weight_decay = 1e-4;
  int64_t train_steps = 800;
  int64_t workers = 1;
  std::string dataset;

  static Config from_file(const std::string& path);
  void set(const std::string& key, const std::string& value, const std::string& where);
  void validate() const;
  DetectorConfig detector_config() const;
};

}  // namespace sardet
