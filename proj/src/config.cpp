// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sardet {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected unsigned integer, got '" + v + "'");
  }
}

double parse_real(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected real number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where + ": expected true/false, got '" + v + "'");
}

std::vector<int64_t> parse_int_list(const std::string& v, const std::string& where) {
  std::vector<int64_t> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_int(item, where));
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

}  // namespace

void Config::set(const std::string& key, const std::string& value, const std::string& where) {
  if (key == "seed") seed = parse_u64(value, where);
  else if (key == "image_size") image_size = parse_int(value, where);
  else if (key == "classes") classes = parse_int(value, where);
  else if (key == "T") T = parse_int(value, where);
  else if (key == "schedule_s") schedule_s = parse_real(value, where);
  else if (key == "signal_scale") signal_scale = parse_real(value, where);
  else if (key == "proposals") proposals = parse_int(value, where);
  else if (key == "train_proposals") train_proposals = parse_int(value, where);
  else if (key == "steps") steps = parse_int_list(value, where);
  else if (key == "renewal_thresh") renewal_thresh = parse_real(value, where);
  else if (key == "nms_iou") nms_iou = parse_real(value, where);
  else if (key == "min_box_size") min_box_size = parse_real(value, where);
  else if (key == "confidence") confidence = parse_real(value, where);
  else if (key == "agent_n") agent_n = parse_int(value, where);
  else if (key == "heads") heads = parse_int(value, where);
  else if (key == "ssm_state") ssm_state = parse_int(value, where);
  else if (key == "ssm_chunk") ssm_chunk = parse_int(value, where);
  else if (key == "conv_kw") conv_kw = parse_int(value, where);
  else if (key == "mixer_channels") mixer_channels = parse_int(value, where);
  else if (key == "mixer_pattern") mixer_pattern = value;
  else if (key == "allow_custom_pattern") allow_custom_pattern = parse_bool(value, where);
  else if (key == "mlp_ratio") mlp_ratio = parse_int(value, where);
  else if (key == "with_mixer") with_mixer = parse_bool(value, where);
  else if (key == "fpn_channels") fpn_channels = parse_int(value, where);
  else if (key == "roi_grid") roi_grid = parse_int(value, where);
  else if (key == "temb_dim") temb_dim = parse_int(value, where);
  else if (key == "head_hidden") head_hidden = parse_int(value, where);
  else if (key == "lr") lr = parse_real(value, where);
  else if (key == "weight_decay") weight_decay = parse_real(value, where);
  else if (key == "train_steps") train_steps = parse_int(value, where);
  else if (key == "workers") workers = parse_int(value, where);
  else if (key == "dataset") dataset = value;
  else throw ConfigError(where + ": unknown config key '" + key + "'");
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    const std::string where = path + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    cfg.set(key, value, where);
  }
  cfg.validate();
  return cfg;
}

void Config::validate() const {
  detector_config().validate();  // covers the model-side keys
  if (proposals < 1) throw ConfigError("proposals must be >= 1");
  if (train_proposals < 1) throw ConfigError("train_proposals must be >= 1");
  if (steps.empty()) throw ConfigError("steps must not be empty");
  for (size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] < 1 || steps[i] > T) throw ConfigError("steps entries must lie in [1, T]");
    if (i > 0 && steps[i] >= steps[i - 1]) throw ConfigError("steps must be strictly decreasing");
  }
  if (renewal_thresh < 0.0 || renewal_thresh > 1.0) throw ConfigError("renewal_thresh must lie in [0,1]");
  if (nms_iou <= 0.0 || nms_iou >= 1.0) throw ConfigError("nms_iou must lie in (0,1)");
  if (min_box_size <= 0.0 || min_box_size >= 0.5) throw ConfigError("min_box_size must lie in (0, 0.5)");
  if (confidence < 0.0 || confidence > 1.0) throw ConfigError("confidence must lie in [0,1]");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (train_steps < 1) throw ConfigError("train_steps must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

DetectorConfig Config::detector_config() const {
  DetectorConfig dc;
  dc.image_size = image_size;
  dc.classes = classes;
  dc.with_mixer = with_mixer;
  dc.mixer.channels = mixer_channels;
  dc.mixer.pattern = mixer_pattern;
  dc.mixer.allow_custom_pattern = allow_custom_pattern;
  dc.mixer.ssm_state = ssm_state;
  dc.mixer.ssm_chunk = ssm_chunk;
  dc.mixer.conv_kw = conv_kw;
  dc.mixer.heads = heads;
  dc.mixer.agents = agent_n;
  dc.mixer.mlp_ratio = mlp_ratio;
  dc.fpn_width = fpn_channels;
  dc.roi_grid = roi_grid;
  dc.temb_dim = temb_dim;
  dc.head_hidden = head_hidden;
  dc.diffusion_T = T;
  dc.schedule_s = schedule_s;
  dc.signal_scale = signal_scale;
  dc.min_box_size = min_box_size;
  return dc;
}

}  // namespace sardet
