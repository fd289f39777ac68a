// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sardet/evalkit.hpp"
#include "sardet/rng.hpp"

using namespace sardet;
using evalkit::Box;

namespace {

BoxSet make_set(std::vector<std::array<double, 4>> boxes, std::vector<int> labels, std::vector<double> scores = {}) {
  BoxSet s;
  if (boxes.empty()) return s;
  s.boxes = Tensor({static_cast<int64_t>(boxes.size()), 4});
  for (size_t i = 0; i < boxes.size(); ++i) {
    for (int64_t j = 0; j < 4; ++j) s.boxes[static_cast<int64_t>(i) * 4 + j] = boxes[i][static_cast<size_t>(j)];
  }
  s.labels = std::move(labels);
  s.scores = scores.empty() ? std::vector<double>(boxes.size(), 1.0) : std::move(scores);
  return s;
}

// Exhaustive PR recount at every threshold; independent of the cumulative
// implementation inside average_precision.
double brute_force_ap(const std::vector<std::pair<double, uint8_t>>& scored, int64_t n_gt) {
  if (n_gt == 0 || scored.empty()) return 0.0;
  std::vector<double> thresholds;
  for (const auto& s : scored) thresholds.push_back(s.first);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::vector<std::pair<double, double>> pr;  // recall, precision
  for (double th : thresholds) {
    int64_t tp = 0, fp = 0;
    for (const auto& s : scored) {
      if (s.first >= th) (s.second ? tp : fp) += 1;
    }
    pr.emplace_back(static_cast<double>(tp) / static_cast<double>(n_gt),
                    static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  double ap = 0.0, prev_r = 0.0;
  for (size_t i = 0; i < pr.size(); ++i) {
    double pmax = 0.0;
    for (size_t j = i; j < pr.size(); ++j) pmax = std::max(pmax, pr[j].second);
    ap += (pr[i].first - prev_r) * pmax;
    prev_r = pr[i].first;
  }
  return ap;
}

}  // namespace

TEST_CASE("iou basics") {
  const Box a = {0.5, 0.5, 0.2, 0.2};
  CHECK(evalkit::iou(a, a) == doctest::Approx(1.0));
  const Box far = {0.9, 0.9, 0.05, 0.05};
  CHECK(evalkit::iou(a, far) == 0.0);
  // Corner boxes (0,0)-(2,2) and (1,1)-(3,3): intersection 1, union 7.
  const Box c1 = {1.0, 1.0, 2.0, 2.0};
  const Box c2 = {2.0, 2.0, 2.0, 2.0};
  CHECK(evalkit::iou(c1, c2) == doctest::Approx(1.0 / 7.0));
  CHECK(evalkit::iou(c2, c1) == doctest::Approx(evalkit::iou(c1, c2)));
  // Translation invariance.
  const Box t1 = {1.3, 0.9, 2.0, 2.0};
  const Box t2 = {2.3, 1.9, 2.0, 2.0};
  CHECK(evalkit::iou(t1, t2) == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("greedy matching") {
  const auto gts = make_set({{0.3, 0.3, 0.2, 0.2}, {0.7, 0.7, 0.2, 0.2}}, {0, 1});
  const auto perfect = evalkit::match_detections(gts, gts, 0.5);
  CHECK(perfect.det_tp == std::vector<uint8_t>{1, 1});
  CHECK(perfect.gt_matched == std::vector<uint8_t>{1, 1});

  const BoxSet none;
  const auto empty = evalkit::match_detections(none, gts, 0.5);
  CHECK(empty.det_tp.empty());
  CHECK(empty.gt_matched == std::vector<uint8_t>{0, 0});

  // Two detections on one ground truth: the first (higher score) wins.
  const auto dets = make_set({{0.3, 0.3, 0.2, 0.2}, {0.31, 0.3, 0.2, 0.2}}, {0, 0}, {0.9, 0.8});
  const auto one_gt = make_set({{0.3, 0.3, 0.2, 0.2}}, {0});
  const auto m = evalkit::match_detections(dets, one_gt, 0.5);
  CHECK(m.det_tp == std::vector<uint8_t>{1, 0});

  // Class-aware: same box, wrong class does not match.
  const auto wrong_cls = make_set({{0.3, 0.3, 0.2, 0.2}}, {1});
  const auto mc = evalkit::match_detections(wrong_cls, one_gt, 0.5);
  CHECK(mc.det_tp == std::vector<uint8_t>{0});
}

TEST_CASE("average precision endpoints and the 1TP+1FP case") {
  CHECK(evalkit::average_precision({{0.9, 1}, {0.8, 1}}, 2) == doctest::Approx(1.0));
  CHECK(evalkit::average_precision({}, 2) == doctest::Approx(0.0));
  // 1 TP then 1 FP on 2 GTs: precision 1 at recall 0.5, recall stalls.
  CHECK(evalkit::average_precision({{0.9, 1}, {0.8, 0}}, 2) == doctest::Approx(0.5));
}

TEST_CASE("average precision matches the brute-force enumeration oracle") {
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const int64_t n = rng.uniform_int(1, 12);
    const int64_t n_gt = rng.uniform_int(1, 6);
    std::vector<std::pair<double, uint8_t>> scored;
    int64_t tp_budget = n_gt;
    for (int64_t i = 0; i < n; ++i) {
      const bool tp = tp_budget > 0 && rng.uniform() < 0.5;
      if (tp) --tp_budget;
      scored.emplace_back(rng.uniform(), tp ? 1 : 0);
    }
    const double got = evalkit::average_precision(scored, n_gt);
    const double want = brute_force_ap(scored, n_gt);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("AP monotonicity under added detections") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int64_t n_gt = rng.uniform_int(2, 6);
    std::vector<std::pair<double, uint8_t>> scored;
    int64_t tp_used = 0;
    for (int64_t i = 0; i < 6; ++i) {
      const bool tp = tp_used < n_gt && rng.uniform() < 0.5;
      tp_used += tp ? 1 : 0;
      scored.emplace_back(rng.uniform(0.2, 1.0), tp ? 1 : 0);
    }
    const double base = evalkit::average_precision(scored, n_gt);
    if (tp_used < n_gt) {
      auto plus_tp = scored;
      plus_tp.emplace_back(rng.uniform(0.2, 1.0), 1);
      CHECK(evalkit::average_precision(plus_tp, n_gt) >= base - 1e-12);
    }
    auto plus_fp = scored;
    plus_fp.emplace_back(0.01, 0);  // strictly lowest-ranked false positive
    CHECK(evalkit::average_precision(plus_fp, n_gt) <= base + 1e-12);
  }
}

TEST_CASE("evaluator end-to-end: perfect, empty, and mixed") {
  const auto gts = make_set({{0.3, 0.3, 0.2, 0.2}, {0.7, 0.7, 0.2, 0.2}}, {0, 1});
  {
    evalkit::Evaluator ev(3);
    ev.add_image(gts, gts);
    const auto rep = ev.finalize(0.5);
    CHECK(rep.map50 == doctest::Approx(1.0));
    CHECK(rep.map75 == doctest::Approx(1.0));
    CHECK(rep.precision == doctest::Approx(1.0));
    CHECK(rep.recall == doctest::Approx(1.0));
    CHECK(rep.f1 == doctest::Approx(1.0));
    CHECK(rep.warnings.size() == 1);  // class 2 has no ground truth
  }
  {
    evalkit::Evaluator ev(2);
    ev.add_image(BoxSet{}, gts);
    const auto rep = ev.finalize(0.5);
    CHECK(rep.map50 == doctest::Approx(0.0));
    CHECK(rep.precision == doctest::Approx(0.0));
    CHECK(rep.recall == doctest::Approx(0.0));
    CHECK(rep.f1 == doctest::Approx(0.0));
  }
  {
    // 1 TP and 1 FP against 2 same-class GTs: P = R = F1 = 0.5.
    const auto gts2 = make_set({{0.3, 0.3, 0.2, 0.2}, {0.7, 0.7, 0.2, 0.2}}, {0, 0});
    const auto dets = make_set({{0.3, 0.3, 0.2, 0.2}, {0.1, 0.8, 0.1, 0.1}}, {0, 0}, {0.9, 0.8});
    evalkit::Evaluator ev(1);
    ev.add_image(dets, gts2);
    const auto rep = ev.finalize(0.5);
    CHECK(rep.precision == doctest::Approx(0.5));
    CHECK(rep.recall == doctest::Approx(0.5));
    CHECK(rep.f1 == doctest::Approx(0.5));
    CHECK(rep.map50 == doctest::Approx(0.5));
  }
}

TEST_CASE("metrics are deterministic") {
  Rng rng(3);
  evalkit::Evaluator ev1(2), ev2(2);
  for (int img = 0; img < 4; ++img) {
    std::vector<std::array<double, 4>> db, gb;
    std::vector<int> dl, gl;
    std::vector<double> ds;
    for (int i = 0; i < 5; ++i) {
      db.push_back({rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), 0.1, 0.1});
      dl.push_back(static_cast<int>(rng.uniform_int(0, 1)));
      ds.push_back(rng.uniform());
    }
    for (int i = 0; i < 3; ++i) {
      gb.push_back({rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), 0.1, 0.1});
      gl.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    const auto dets = make_set(db, dl, ds);
    const auto gts = make_set(gb, gl);
    ev1.add_image(dets, gts);
    ev2.add_image(dets, gts);
  }
  const auto r1 = ev1.finalize(0.5);
  const auto r2 = ev2.finalize(0.5);
  CHECK(r1.map50 == r2.map50);
  CHECK(r1.map75 == r2.map75);
  CHECK(r1.f1 == r2.f1);
}
