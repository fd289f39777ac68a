// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "sardet/nn.hpp"

namespace sardet::pipeline {

TrainStats train_detector(Detector& det, const std::vector<synth::SceneSample>& data, const Config& cfg,
                          std::ostream* log_csv) {
  if (data.empty()) throw ConfigError("train: dataset is empty");
  const diffusion::Schedule& sched = det.schedule();
  AdamW opt(cfg.lr, cfg.weight_decay);
  const Rng base(cfg.seed);
  if (log_csv) (*log_csv) << "step,box_loss,cls_loss,total\n";
  TrainStats stats;
  char line[160];
  for (int64_t step = 0; step < cfg.train_steps; ++step) {
    const synth::SceneSample& scene = data[static_cast<size_t>(step) % data.size()];
    Rng rng = base.fork(static_cast<uint64_t>(step) + 1);
    const diffusion::PaddedBoxes padded =
        diffusion::pad_gt_boxes(scene.gt, cfg.train_proposals, static_cast<int>(cfg.classes), sched, rng);
    const Tensor z0 = diffusion::scale_boxes(padded.boxes01, sched.signal_scale);
    const int64_t t = rng.uniform_int(1, sched.T);
    const Tensor z_t = diffusion::corrupt_boxes(z0, t, sched, rng);

    det.params().zero_grad();
    const head::Pyramid fp = det.features(scene.image);
    const head::HeadOut out = det.decode(fp, z_t, t);
    ag::Var box_term = nn::masked_sqnorm_mean(out.z0_hat, z0, padded.gt_mask);
    ag::Var cls_term = nn::cross_entropy_mean(out.logits, padded.labels);
    ag::Var total = nn::add(box_term, cls_term);
    total.backward();
    opt.step(det.params().all());

    stats.final_box_loss = box_term.val()[0];
    stats.final_cls_loss = cls_term.val()[0];
    stats.final_total = total.val()[0];
    stats.steps = step + 1;
    if (!std::isfinite(stats.final_total)) {
      throw std::runtime_error("train: loss diverged at step " + std::to_string(step));
    }
    if (log_csv) {
      std::snprintf(line, sizeof(line), "%lld,%.6f,%.6f,%.6f\n", static_cast<long long>(step), stats.final_box_loss,
                    stats.final_cls_loss, stats.final_total);
      (*log_csv) << line;
    }
  }
  return stats;
}

EvalOutput evaluate_detector(const Detector& det, const std::vector<synth::SceneSample>& data, const Config& cfg) {
  EvalOutput out;
  out.detections.resize(data.size());
  diffusion::SampleConfig sc;
  sc.renewal_thresh = cfg.renewal_thresh;
  sc.nms_iou = cfg.nms_iou;
  sc.min_box_size = cfg.min_box_size;
  const Rng base(cfg.seed);

  auto run_one = [&](size_t i) {
    Rng rng = base.fork(0x5EED0000ull + i);
    ModelDenoiser denoiser(det, data[i].image);
    out.detections[i] = diffusion::sample(denoiser, cfg.proposals, cfg.steps, det.schedule(), rng, sc);
  };

  const int64_t workers = std::min<int64_t>(cfg.workers, static_cast<int64_t>(data.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < data.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int64_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (size_t i = static_cast<size_t>(w); i < data.size(); i += static_cast<size_t>(workers)) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  evalkit::Evaluator ev(static_cast<int>(cfg.classes));
  for (size_t i = 0; i < data.size(); ++i) ev.add_image(out.detections[i], data[i].gt);
  out.report = ev.finalize(cfg.confidence);
  return out;
}

void write_metrics_csv(std::ostream& os, const evalkit::Report& rep) {
  os << "class,ap50,ap75,precision,recall,f1\n";
  char line[200];
  for (const auto& c : rep.per_class) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", c.cls, c.ap50, c.ap75, c.precision, c.recall,
                  c.f1);
    os << line;
  }
  std::snprintf(line, sizeof(line), "overall,%.6f,%.6f,%.6f,%.6f,%.6f\n", rep.map50, rep.map75, rep.precision,
                rep.recall, rep.f1);
  os << line;
}

void write_detections_csv(std::ostream& os, const std::vector<std::string>& image_ids,
                          const std::vector<BoxSet>& dets) {
  os << "image_id,class,score,cx,cy,w,h\n";
  char line[256];
  for (size_t i = 0; i < dets.size(); ++i) {
    const BoxSet& d = dets[i];
    for (int64_t j = 0; j < d.size(); ++j) {
      std::snprintf(line, sizeof(line), "%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", image_ids[i].c_str(),
                    d.labels[static_cast<size_t>(j)], d.scores[static_cast<size_t>(j)], d.boxes[j * 4],
                    d.boxes[j * 4 + 1], d.boxes[j * 4 + 2], d.boxes[j * 4 + 3]);
      os << line;
    }
  }
}

}  // namespace sardet::pipeline
