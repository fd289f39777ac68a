// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sardet/diffusion.hpp"
#include "sardet/evalkit.hpp"
#include "testutil.hpp"

using namespace sardet;
using namespace sardet::diffusion;
using testutil::max_abs_diff;
using testutil::rand_tensor;

namespace {

struct GtDenoiser : Denoiser {
  Tensor gt_scaled;  // [M,4]
  std::vector<int> gt_labels;

  void decode(const Tensor& z_t, int64_t, Tensor& z0_hat, std::vector<double>& scores,
              std::vector<int>& labels) const override {
    const int64_t n = z_t.dim(0);
    const int64_t m = gt_scaled.dim(0);
    z0_hat = Tensor({n, 4});
    scores.assign(static_cast<size_t>(n), 1.0);
    labels.assign(static_cast<size_t>(n), 0);
    for (int64_t i = 0; i < n; ++i) {
      const int64_t g = i % m;
      for (int64_t j = 0; j < 4; ++j) z0_hat[i * 4 + j] = gt_scaled[g * 4 + j];
      labels[static_cast<size_t>(i)] = gt_labels[static_cast<size_t>(g)];
    }
  }
};

}  // namespace

TEST_CASE("cosine schedule invariants and pinned value") {
  const Schedule s = build_schedule(1000, 0.008);
  CHECK(s.alpha_bar[0] == 1.0);
  for (int64_t t = 1; t <= 1000; ++t) {
    CHECK(s.alpha[static_cast<size_t>(t)] > 0.0);
    CHECK(s.alpha[static_cast<size_t>(t)] <= 1.0);
    CHECK(s.alpha_bar[static_cast<size_t>(t)] < s.alpha_bar[static_cast<size_t>(t - 1)]);
    CHECK(s.alpha[static_cast<size_t>(t)] >= 0.001);
  }
  // Closed-form oracle at t = 500 (no clipping active there).
  auto f = [](double t) {
    const double x = ((t / 1000.0 + 0.008) / 1.008) * std::numbers::pi / 2.0;
    return std::cos(x) * std::cos(x);
  };
  const double expect = f(500.0) / f(0.0);
  CHECK(s.alpha_bar[500] == doctest::Approx(expect).epsilon(1e-9));
  // Regression pin.
  CHECK(s.alpha_bar[500] == doctest::Approx(0.493843590441).epsilon(1e-6));
}

TEST_CASE("corruption at t=0 is the identity") {
  const Schedule s = build_schedule(100, 0.008);
  Rng rng(1);
  const Tensor z0 = rand_tensor({5, 4}, rng, -2.0, 2.0);
  Rng noise(2);
  const Tensor z = corrupt_boxes(z0, 0, s, noise);
  CHECK(max_abs_diff(z, z0) == 0.0);
  CHECK_THROWS_AS(corrupt_boxes(z0, 101, s, noise), ConfigError);
}

TEST_CASE("corruption statistics match the analytic mean and std") {
  const Schedule s = build_schedule(1000, 0.008);
  Rng rng(3);
  const Tensor z0({1, 4}, {0.8, -1.2, 0.5, 1.6});
  const int64_t n = 100000;
  for (int64_t t : {250, 500, 1000}) {
    const double ab = s.alpha_bar[static_cast<size_t>(t)];
    const double mu_scale = std::sqrt(ab);
    const double sigma = std::sqrt(1.0 - ab);
    std::array<double, 4> mean{}, m2{};
    for (int64_t i = 0; i < n; ++i) {
      const Tensor z = corrupt_boxes(z0, t, s, rng);
      for (int64_t j = 0; j < 4; ++j) {
        mean[static_cast<size_t>(j)] += z[j];
        m2[static_cast<size_t>(j)] += z[j] * z[j];
      }
    }
    for (int64_t j = 0; j < 4; ++j) {
      const double m = mean[static_cast<size_t>(j)] / static_cast<double>(n);
      const double var = m2[static_cast<size_t>(j)] / static_cast<double>(n) - m * m;
      const double sd = std::sqrt(var);
      const double mu = mu_scale * z0[j];
      CHECK(std::abs(m - mu) <= 0.01 * std::max(std::abs(mu), sigma));
      CHECK(std::abs(sd - sigma) <= 0.01 * sigma);
    }
  }
}

TEST_CASE("pad_gt_boxes construction") {
  const Schedule s = build_schedule(50, 0.008);
  Rng rng(4);
  BoxSet gt;
  gt.boxes = Tensor({2, 4}, {0.3, 0.3, 0.1, 0.2, 0.7, 0.6, 0.2, 0.1});
  gt.labels = {1, 0};

  const auto same = pad_gt_boxes(gt, 2, 3, s, rng);
  CHECK(max_abs_diff(same.boxes01, gt.boxes) == 0.0);
  CHECK(same.gt_mask == std::vector<uint8_t>{1, 1});
  CHECK_FALSE(same.truncated);

  const auto padded = pad_gt_boxes(gt, 5, 3, s, rng);
  CHECK(padded.boxes01.dim(0) == 5);
  for (int64_t i = 0; i < 2; ++i) {
    for (int64_t j = 0; j < 4; ++j) CHECK(padded.boxes01[i * 4 + j] == gt.boxes[i * 4 + j]);
  }
  for (int64_t i = 2; i < 5; ++i) {
    CHECK(padded.labels[static_cast<size_t>(i)] == 3);
    CHECK(padded.gt_mask[static_cast<size_t>(i)] == 0);
    for (int64_t j = 0; j < 4; ++j) {
      CHECK(padded.boxes01[i * 4 + j] >= 0.0);
      CHECK(padded.boxes01[i * 4 + j] <= 1.0);
    }
  }

  BoxSet empty;
  const auto all_pad = pad_gt_boxes(empty, 3, 3, s, rng);
  CHECK(all_pad.boxes01.dim(0) == 3);
  for (uint8_t m : all_pad.gt_mask) CHECK(m == 0);

  const auto trunc = pad_gt_boxes(gt, 1, 3, s, rng);
  CHECK(trunc.truncated);
  CHECK(trunc.boxes01.dim(0) == 1);
}

TEST_CASE("ddim_step endpoint and exact-noise reproduction") {
  const Schedule s = build_schedule(200, 0.008);
  Rng rng(5);
  const Tensor z0 = rand_tensor({4, 4}, rng, -1.5, 1.5);

  // Exact noise: z_t built from known eps, denoiser returns the true z0.
  const int64_t t = 160, t_next = 80;
  Tensor eps({4, 4});
  for (int64_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  const double ab_t = s.alpha_bar[static_cast<size_t>(t)];
  const double ab_n = s.alpha_bar[static_cast<size_t>(t_next)];
  Tensor z_t({4, 4});
  for (int64_t i = 0; i < z_t.size(); ++i) z_t[i] = std::sqrt(ab_t) * z0[i] + std::sqrt(1 - ab_t) * eps[i];
  const Tensor z_next = ddim_step(z_t, z0, t, t_next, s);
  for (int64_t i = 0; i < z_next.size(); ++i) {
    CHECK(z_next[i] == doctest::Approx(std::sqrt(ab_n) * z0[i] + std::sqrt(1 - ab_n) * eps[i]).epsilon(1e-10));
  }

  // t_next = 0 returns the estimate exactly.
  const Tensor z_end = ddim_step(z_t, z0, t, 0, s);
  CHECK(max_abs_diff(z_end, z0) == 0.0);

  // Degenerate equal-alpha-bar mode: z0_hat == z_t is a fixed point.
  Schedule flat;
  flat.T = 3;
  flat.alpha = {1.0, 1.0, 1.0, 1.0};
  flat.alpha_bar = {0.5, 0.5, 0.5, 0.5};
  const Tensor z_fix = ddim_step(z_t, z_t, 2, 1, flat);
  CHECK(max_abs_diff(z_fix, z_t) <= 1e-12);

  CHECK_THROWS_AS(ddim_step(z_t, z0, 80, 160, s), ConfigError);
}

TEST_CASE("box renewal replaces exactly the low-score rows") {
  Rng rng(6);
  Tensor z = rand_tensor({4, 4}, rng);
  const Tensor z_orig = z;

  Rng r1(7);
  Tensor z_keep = z;
  box_renewal(z_keep, {0.9, 0.8, 0.7, 0.6}, 0.5, r1);
  CHECK(max_abs_diff(z_keep, z_orig) == 0.0);

  Rng r2(8);
  Tensor z_all = z;
  box_renewal(z_all, {0.1, 0.2, 0.0, 0.4}, 0.5, r2);
  CHECK(z_all.dim(0) == 4);
  CHECK(max_abs_diff(z_all, z_orig) > 0.0);

  // Mixed: survivors bit-identical, replaced rows equal the seeded stream.
  Rng r3(9);
  Tensor z_mixed = z;
  box_renewal(z_mixed, {0.9, 0.1, 0.8, 0.2}, 0.5, r3);
  Rng oracle(9);
  for (int64_t j = 0; j < 4; ++j) CHECK(z_mixed[1 * 4 + j] == oracle.normal());
  for (int64_t j = 0; j < 4; ++j) CHECK(z_mixed[3 * 4 + j] == oracle.normal());
  for (int64_t j = 0; j < 4; ++j) {
    CHECK(z_mixed[0 * 4 + j] == z_orig[0 * 4 + j]);
    CHECK(z_mixed[2 * 4 + j] == z_orig[2 * 4 + j]);
  }
}

TEST_CASE("nms basics and brute-force chain oracle") {
  Tensor boxes({3, 4}, {0.2, 0.2, 0.1, 0.1, 0.5, 0.5, 0.1, 0.1, 0.8, 0.8, 0.1, 0.1});
  const auto all_kept = nms(boxes, {0.9, 0.8, 0.7}, {0, 0, 0}, 0.5);
  CHECK(all_kept.size() == 3);

  Tensor dup({2, 4}, {0.5, 0.5, 0.2, 0.2, 0.5, 0.5, 0.2, 0.2});
  const auto kept = nms(dup, {0.4, 0.9}, {1, 1}, 0.5);
  CHECK(kept == std::vector<int64_t>{1});
  // Same boxes in different classes survive class-aware suppression.
  const auto kept2 = nms(dup, {0.4, 0.9}, {0, 1}, 0.5);
  CHECK(kept2.size() == 2);

  // Overlap chain a-b-c where a&b and b&c overlap but a&c do not.
  Tensor chain({3, 4}, {0.30, 0.5, 0.20, 0.2, 0.42, 0.5, 0.20, 0.2, 0.54, 0.5, 0.20, 0.2});
  const std::vector<double> scores = {0.6, 0.9, 0.5};
  const std::vector<int> labels = {0, 0, 0};
  const auto chain_kept = nms(chain, scores, labels, 0.3);
  // Brute force greedy on sorted order.
  std::vector<int64_t> order = {1, 0, 2};
  std::vector<int64_t> expect;
  for (int64_t cand : order) {
    bool sup = false;
    for (int64_t k : expect) {
      const double v = evalkit::iou({chain[cand * 4], chain[cand * 4 + 1], chain[cand * 4 + 2], chain[cand * 4 + 3]},
                                    {chain[k * 4], chain[k * 4 + 1], chain[k * 4 + 2], chain[k * 4 + 3]});
      if (v >= 0.3) sup = true;
    }
    if (!sup) expect.push_back(cand);
  }
  CHECK(chain_kept == expect);
}

TEST_CASE("oracle-denoiser sampling recovers the ground truth exactly") {
  const Schedule s = build_schedule(1000, 0.008);
  GtDenoiser den;
  Tensor gt01({2, 4}, {0.3, 0.4, 0.2, 0.15, 0.7, 0.65, 0.18, 0.22});
  den.gt_scaled = scale_boxes(gt01, s.signal_scale);
  den.gt_labels = {0, 2};

  Rng rng(10);
  const BoxSet out = sample(den, 64, {1000}, s, rng);
  REQUIRE(out.size() == 2);
  // NMS keeps one box per ground truth; verify coordinates to 1e-6.
  for (int64_t g = 0; g < 2; ++g) {
    double best = 1e30;
    for (int64_t i = 0; i < out.size(); ++i) {
      if (out.labels[static_cast<size_t>(i)] != den.gt_labels[static_cast<size_t>(g)]) continue;
      double diff = 0.0;
      for (int64_t j = 0; j < 4; ++j) diff = std::max(diff, std::abs(out.boxes[i * 4 + j] - gt01[g * 4 + j]));
      best = std::min(best, diff);
    }
    CHECK(best <= 1e-6);
  }

  // Single proposal, one ground truth.
  GtDenoiser den1;
  Tensor one({1, 4}, {0.5, 0.5, 0.3, 0.4});
  den1.gt_scaled = scale_boxes(one, s.signal_scale);
  den1.gt_labels = {1};
  Rng rng2(11);
  const BoxSet out1 = sample(den1, 1, {1000}, s, rng2);
  REQUIRE(out1.size() == 1);
  for (int64_t j = 0; j < 4; ++j) CHECK(std::abs(out1.boxes[j] - one[j]) <= 1e-6);
}

TEST_CASE("sampling is a pure function of the seed") {
  const Schedule s = build_schedule(500, 0.008);
  GtDenoiser den;
  Tensor gt01({1, 4}, {0.4, 0.5, 0.2, 0.2});
  den.gt_scaled = scale_boxes(gt01, s.signal_scale);
  den.gt_labels = {0};
  Rng a(12), b(12);
  const BoxSet r1 = sample(den, 8, {500, 250}, s, a);
  const BoxSet r2 = sample(den, 8, {500, 250}, s, b);
  REQUIRE(r1.size() == r2.size());
  CHECK(max_abs_diff(r1.boxes, r2.boxes) == 0.0);
  CHECK(r1.scores == r2.scores);
  CHECK(r1.labels == r2.labels);
}

TEST_CASE("scale/unscale round trip with clamping") {
  Rng rng(13);
  const Tensor b01 = rand_tensor({6, 4}, rng, 0.05, 0.95);
  const Tensor z = scale_boxes(b01, 2.0);
  for (int64_t i = 0; i < z.size(); ++i) {
    CHECK(z[i] >= -2.0);
    CHECK(z[i] <= 2.0);
  }
  const Tensor back = unscale_boxes(z, 2.0, 1e-3);
  CHECK(max_abs_diff(back, b01) <= 1e-12);

  Tensor wild({1, 4}, {5.0, -5.0, -3.0, 0.0});
  const Tensor clamped = unscale_boxes(wild, 2.0, 1e-3);
  CHECK(clamped[0] == 1.0);
  CHECK(clamped[1] == 0.0);
  CHECK(clamped[2] == doctest::Approx(1e-3));
  CHECK(clamped[3] == doctest::Approx(0.5));
}
