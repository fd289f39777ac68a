// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sardet/bench.hpp"
#include "sardet/config.hpp"
#include "sardet/io.hpp"
#include "sardet/pipeline.hpp"
#include "sardet/suite.hpp"
#include "sardet/synth.hpp"

namespace fs = std::filesystem;

namespace sardet::cli {

namespace {

// Seed specs: "a..b" (half-open range) or a comma-separated list.
std::vector<uint64_t> parse_seeds(const std::string& spec) {
  std::vector<uint64_t> seeds;
  const size_t dots = spec.find("..");
  if (dots != std::string::npos) {
    const uint64_t a = std::stoull(spec.substr(0, dots));
    const uint64_t b = std::stoull(spec.substr(dots + 2));
    if (b < a) throw ConfigError("seed range end before start: " + spec);
    for (uint64_t s = a; s < b; ++s) seeds.push_back(s);
  } else {
    std::istringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) seeds.push_back(std::stoull(item));
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed spec: " + spec);
  return seeds;
}

Config load_config(const std::string& path, uint64_t seed_override, bool seed_given) {
  Config cfg;
  if (!path.empty()) cfg = Config::from_file(path);
  if (seed_given) cfg.seed = seed_override;
  cfg.validate();
  return cfg;
}

struct CommonOpts {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "plain-text key = value configuration file");
  cmd->add_option("--seed", o.seed, "run seed (overrides the config)")->each([&o](const std::string&) {
    o.seed_given = true;
  });
}

int cmd_gen_data(const std::string& out_dir, const std::string& seeds_spec, int64_t size, int64_t classes) {
  const auto seeds = parse_seeds(seeds_spec);
  synth::write_dataset(out_dir, seeds, size, size, classes);
  std::cout << "wrote " << seeds.size() << " scenes to " << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonOpts& common, std::string dataset, const std::string& out_ckpt,
              const std::string& log_path, int64_t steps_override) {
  Config cfg = load_config(common.config_path, common.seed, common.seed_given);
  if (!dataset.empty()) cfg.dataset = dataset;
  if (cfg.dataset.empty()) throw ConfigError("missing required key 'dataset' (set it in the config or pass --dataset)");
  if (steps_override > 0) cfg.train_steps = steps_override;
  cfg.validate();

  const auto data = synth::read_dataset(cfg.dataset);
  Detector det(cfg.detector_config(), cfg.seed);
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw IoError("cannot write " + log_path);
  }
  const pipeline::TrainStats stats = pipeline::train_detector(det, data, cfg, log_path.empty() ? nullptr : &log);
  io::save_checkpoint(out_ckpt, det.params());
  std::cout << "trained " << stats.steps << " steps; final loss " << stats.final_total << " (box "
            << stats.final_box_loss << ", cls " << stats.final_cls_loss << "); checkpoint at " << out_ckpt << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& common, std::string dataset, const std::string& ckpt, const std::string& metrics_path,
             const std::string& dets_path, const std::string& overlay_dir, int64_t workers_override) {
  Config cfg = load_config(common.config_path, common.seed, common.seed_given);
  if (!dataset.empty()) cfg.dataset = dataset;
  if (cfg.dataset.empty()) throw ConfigError("missing required key 'dataset' (set it in the config or pass --dataset)");
  if (workers_override > 0) cfg.workers = workers_override;
  cfg.validate();

  const auto data = synth::read_dataset(cfg.dataset);
  Detector det(cfg.detector_config(), cfg.seed);
  if (!ckpt.empty()) io::load_checkpoint(ckpt, det.params());

  const pipeline::EvalOutput out = pipeline::evaluate_detector(det, data, cfg);

  std::ofstream metrics(metrics_path);
  if (!metrics) throw IoError("cannot write " + metrics_path);
  pipeline::write_metrics_csv(metrics, out.report);

  if (!dets_path.empty()) {
    std::vector<std::string> ids;
    char buf[32];
    for (size_t i = 0; i < data.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%05zu", i);
      ids.emplace_back(buf);
    }
    std::ofstream dets(dets_path);
    if (!dets) throw IoError("cannot write " + dets_path);
    pipeline::write_detections_csv(dets, ids, out.detections);
  }

  if (!overlay_dir.empty()) {
    fs::create_directories(overlay_dir);
    char name[64];
    for (size_t i = 0; i < data.size(); ++i) {
      std::snprintf(name, sizeof(name), "scene_%05zu.pgm", i);
      io::write_pgm_overlay(overlay_dir + "/" + name, data[i].image, out.detections[i]);
    }
  }

  for (const std::string& w : out.report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "mAP50 " << out.report.map50 << " mAP75 " << out.report.map75 << " P " << out.report.precision
            << " R " << out.report.recall << " F1 " << out.report.f1 << "\n";
  return 0;
}

int cmd_sample(const CommonOpts& common, const std::string& scene_path, const std::string& ckpt,
               const std::string& out_path) {
  Config cfg = load_config(common.config_path, common.seed, common.seed_given);
  const Tensor image = io::read_grid(scene_path);
  if (image.dim(1) != cfg.image_size || image.dim(2) != cfg.image_size) {
    Config adjusted = cfg;
    adjusted.image_size = image.dim(1);
    if (image.dim(1) != image.dim(2)) throw ConfigError("sample: scene must be square");
    adjusted.validate();
    cfg = adjusted;
  }
  Detector det(cfg.detector_config(), cfg.seed);
  if (!ckpt.empty()) io::load_checkpoint(ckpt, det.params());

  diffusion::SampleConfig sc;
  sc.renewal_thresh = cfg.renewal_thresh;
  sc.nms_iou = cfg.nms_iou;
  sc.min_box_size = cfg.min_box_size;
  Rng rng = Rng(cfg.seed).fork(0x5EED0000ull);
  ModelDenoiser denoiser(det, image);
  const BoxSet dets = diffusion::sample(denoiser, cfg.proposals, cfg.steps, det.schedule(), rng, sc);

  std::ofstream os(out_path);
  if (!os) throw IoError("cannot write " + out_path);
  const std::string id = fs::path(scene_path).stem().string();
  pipeline::write_detections_csv(os, {id}, {dets});
  std::cout << dets.size() << " detections written to " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(const CommonOpts& common) {
  const suite::GradSuiteResult res = suite::run_gradient_suite(common.seed_given ? common.seed : 7);
  std::cout << res.log;
  if (!res.passed) {
    std::cerr << "gradient suite FAILED\n";
    return 2;
  }
  std::cout << "gradient suite passed\n";
  return 0;
}

int cmd_bench(const std::string& out_path, const std::string& kind, int runs) {
  std::vector<bench::Row> rows;
  if (kind == "all" || kind == "scan") {
    const auto scan_rows = bench::bench_scans(runs);
    rows.insert(rows.end(), scan_rows.begin(), scan_rows.end());
  }
  if (kind == "all" || kind == "attention") {
    const bench::AttnScaling s = bench::bench_attention_scaling(1024, 4096, 64, 16, runs);
    const auto arows = bench::attention_rows(s, 64, 16);
    rows.insert(rows.end(), arows.begin(), arows.end());
  }
  if (out_path.empty()) {
    bench::write_csv(std::cout, rows);
  } else {
    std::ofstream os(out_path);
    if (!os) throw IoError("cannot write " + out_path);
    bench::write_csv(os, rows);
    std::cout << "wrote " << rows.size() << " bench rows to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("sardet");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"noise-to-box detector on synthetic scatterer scenes"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_out, gen_seeds = "0..100";
  int64_t gen_size = 128, gen_classes = 3;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seeds", gen_seeds, "seed range a..b (half-open) or comma list");
  gen->add_option("--size", gen_size, "scene size (divisible by 32)");
  gen->add_option("--classes", gen_classes, "number of target classes");

  // train
  auto* train = app.add_subcommand("train", "train a detector");
  CommonOpts train_common;
  add_common(train, train_common);
  std::string train_dataset, train_out, train_log;
  int64_t train_steps = 0;
  train->add_option("--dataset", train_dataset, "dataset directory");
  train->add_option("--out", train_out, "checkpoint output directory")->required();
  train->add_option("--log", train_log, "training log CSV path");
  train->add_option("--steps", train_steps, "override train_steps");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a detector on a dataset");
  CommonOpts eval_common;
  add_common(eval, eval_common);
  std::string eval_dataset, eval_ckpt, eval_metrics, eval_dets, eval_overlays;
  int64_t eval_workers = 0;
  eval->add_option("--dataset", eval_dataset, "dataset directory");
  eval->add_option("--ckpt", eval_ckpt, "checkpoint directory (omit for a fresh model)");
  eval->add_option("--out-metrics", eval_metrics, "metrics CSV path")->required();
  eval->add_option("--out-dets", eval_dets, "detections CSV path");
  eval->add_option("--overlay-dir", eval_overlays, "directory for P5 overlay images");
  eval->add_option("--workers", eval_workers, "parallel eval workers");

  // sample
  auto* sample = app.add_subcommand("sample", "run inference on one scene");
  CommonOpts sample_common;
  add_common(sample, sample_common);
  std::string sample_scene, sample_ckpt, sample_out;
  sample->add_option("--scene", sample_scene, "scene .grid file")->required();
  sample->add_option("--ckpt", sample_ckpt, "checkpoint directory");
  sample->add_option("--out", sample_out, "detections CSV path")->required();

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
  CommonOpts grad_common;
  add_common(grad, grad_common);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "scan and attention benchmarks");
  std::string bench_out, bench_kind = "all";
  int bench_runs = 3;
  bench_cmd->add_option("--out", bench_out, "CSV output path (stdout if omitted)");
  bench_cmd->add_option("--kind", bench_kind, "all | scan | attention")
      ->check(CLI::IsMember({"all", "scan", "attention"}));
  bench_cmd->add_option("--runs", bench_runs, "runs per measurement (median reported)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_out, gen_seeds, gen_size, gen_classes);
    if (train->parsed()) return cmd_train(train_common, train_dataset, train_out, train_log, train_steps);
    if (eval->parsed()) {
      return cmd_eval(eval_common, eval_dataset, eval_ckpt, eval_metrics, eval_dets, eval_overlays, eval_workers);
    }
    if (sample->parsed()) return cmd_sample(sample_common, sample_scene, sample_ckpt, sample_out);
    if (grad->parsed()) return cmd_gradcheck(grad_common);
    if (bench_cmd->parsed()) return cmd_bench(bench_out, bench_kind, bench_runs);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace sardet::cli
