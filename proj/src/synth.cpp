// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "sardet/evalkit.hpp"
#include "sardet/io.hpp"
#include "sardet/rng.hpp"

namespace fs = std::filesystem;

namespace sardet::synth {

namespace {

struct Pt {
  double x, y;  // unit layout coordinates, roughly [-0.5, 0.5]
};

// Scatterer layouts; every class places at least 3 peaks.
std::vector<Pt> layout_points(int64_t cls, Rng& rng, bool jitter) {
  std::vector<Pt> pts;
  switch (cls % 3) {
    case 0:  // cross
      pts = {{0.0, 0.0}, {-0.5, 0.0}, {0.5, 0.0}, {0.0, -0.5}, {0.0, 0.5}};
      break;
    case 1:  // line (double row, so the box has usable height)
      pts = {{-0.5, -0.12}, {-0.17, -0.12}, {0.17, -0.12}, {0.5, -0.12},
             {-0.5, 0.12},  {-0.17, 0.12},  {0.17, 0.12},  {0.5, 0.12}};
      break;
    default:  // L-shape
      pts = {{-0.5, -0.5}, {-0.5, 0.0}, {-0.5, 0.5}, {0.0, 0.5}, {0.5, 0.5}};
      break;
  }
  if (jitter) {
    for (Pt& p : pts) {
      p.x += rng.uniform(-0.08, 0.08);
      p.y += rng.uniform(-0.08, 0.08);
    }
  }
  return pts;
}

void splat_gaussian(Tensor& img, double cx_pix, double cy_pix, double amp, double sigma) {
  const int64_t H = img.dim(1), W = img.dim(2);
  const int64_t r = static_cast<int64_t>(std::ceil(3.0 * sigma));
  const int64_t x0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(cx_pix)) - r);
  const int64_t x1 = std::min<int64_t>(W - 1, static_cast<int64_t>(std::ceil(cx_pix)) + r);
  const int64_t y0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(cy_pix)) - r);
  const int64_t y1 = std::min<int64_t>(H - 1, static_cast<int64_t>(std::ceil(cy_pix)) + r);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (int64_t y = y0; y <= y1; ++y) {
    for (int64_t x = x0; x <= x1; ++x) {
      const double dx = static_cast<double>(x) - cx_pix;
      const double dy = static_cast<double>(y) - cy_pix;
      img[y * W + x] += amp * std::exp(-(dx * dx + dy * dy) * inv2s2);
    }
  }
}

// Smooth low-frequency base: bilinear interpolation of a coarse random grid.
Tensor smooth_base(int64_t H, int64_t W, Rng& rng, double lo, double hi) {
  constexpr int64_t kCoarse = 5;
  std::vector<double> coarse(static_cast<size_t>(kCoarse * kCoarse));
  for (double& v : coarse) v = rng.uniform(lo, hi);
  Tensor base({1, H, W});
  for (int64_t y = 0; y < H; ++y) {
    const double fy = static_cast<double>(y) / static_cast<double>(H - 1) * (kCoarse - 1);
    const int64_t y0 = std::min<int64_t>(kCoarse - 2, static_cast<int64_t>(fy));
    const double ty = fy - static_cast<double>(y0);
    for (int64_t x = 0; x < W; ++x) {
      const double fx = static_cast<double>(x) / static_cast<double>(W - 1) * (kCoarse - 1);
      const int64_t x0 = std::min<int64_t>(kCoarse - 2, static_cast<int64_t>(fx));
      const double tx = fx - static_cast<double>(x0);
      const double v00 = coarse[static_cast<size_t>(y0 * kCoarse + x0)];
      const double v01 = coarse[static_cast<size_t>(y0 * kCoarse + x0 + 1)];
      const double v10 = coarse[static_cast<size_t>((y0 + 1) * kCoarse + x0)];
      const double v11 = coarse[static_cast<size_t>((y0 + 1) * kCoarse + x0 + 1)];
      base[y * W + x] = (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
    }
  }
  return base;
}

}  // namespace

Tensor class_template(int64_t cls, int64_t size) {
  Tensor img({1, size, size});
  Rng dummy(0);
  for (const Pt& p : layout_points(cls, dummy, false)) {
    splat_gaussian(img, (p.x * 0.8 + 0.5) * static_cast<double>(size - 1),
                   (p.y * 0.8 + 0.5) * static_cast<double>(size - 1), 1.0, static_cast<double>(size) / 12.0);
  }
  return img;
}

SceneSample gen_scene(uint64_t seed, int64_t H, int64_t W, int64_t class_count) {
  if (H % 32 != 0 || W % 32 != 0) {
    throw ConfigError("gen_scene: H and W must be divisible by 32, got " + std::to_string(H) + "x" +
                      std::to_string(W));
  }
  if (class_count < 1) throw ConfigError("gen_scene: class_count must be >= 1");
  Rng rng(seed);
  SceneSample scene;
  scene.seed = seed;

  Tensor img = smooth_base(H, W, rng, 0.04, 0.10);

  // Bright clutter blobs.
  const int64_t n_clutter = rng.uniform_int(0, 3);
  for (int64_t i = 0; i < n_clutter; ++i) {
    splat_gaussian(img, rng.uniform(0.1, 0.9) * static_cast<double>(W), rng.uniform(0.1, 0.9) * static_cast<double>(H),
                   rng.uniform(0.15, 0.4), rng.uniform(3.0, 8.0));
  }

  // Targets: 1..6 instances, rejection-sampled against heavy overlap.
  const int64_t n_targets = rng.uniform_int(1, 6);
  std::vector<std::array<double, 4>> placed;
  std::vector<int> labels;
  for (int64_t i = 0; i < n_targets; ++i) {
    const int cls = static_cast<int>(rng.uniform_int(0, class_count - 1));
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double extent = rng.uniform(16.0, 36.0);  // pixels
      const double cx = rng.uniform(0.12, 0.88) * static_cast<double>(W);
      const double cy = rng.uniform(0.12, 0.88) * static_cast<double>(H);
      auto pts = layout_points(cls, rng, true);
      double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
      for (const Pt& p : pts) {
        min_x = std::min(min_x, cx + p.x * extent);
        max_x = std::max(max_x, cx + p.x * extent);
        min_y = std::min(min_y, cy + p.y * extent);
        max_y = std::max(max_y, cy + p.y * extent);
      }
      // Tight scatterer box padded 10%, floored at 4 pixels.
      double bw = std::max((max_x - min_x) * 1.2, 4.0);
      double bh = std::max((max_y - min_y) * 1.2, 4.0);
      const double bcx = (min_x + max_x) / 2.0, bcy = (min_y + max_y) / 2.0;
      std::array<double, 4> box = {bcx / static_cast<double>(W), bcy / static_cast<double>(H),
                                   bw / static_cast<double>(W), bh / static_cast<double>(H)};
      if (box[0] - box[2] / 2 < 0.0 || box[0] + box[2] / 2 > 1.0 || box[1] - box[3] / 2 < 0.0 ||
          box[1] + box[3] / 2 > 1.0) {
        continue;
      }
      bool overlaps = false;
      for (const auto& other : placed) {
        if (evalkit::iou(evalkit::Box{box[0], box[1], box[2], box[3]},
                         evalkit::Box{other[0], other[1], other[2], other[3]}) > 0.05) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;
      for (const Pt& p : pts) {
        splat_gaussian(img, cx + p.x * extent, cy + p.y * extent, rng.uniform(3.0, 6.0), extent / 14.0 + 0.8);
      }
      placed.push_back(box);
      labels.push_back(cls);
      break;
    }
  }

  // Multiplicative single-look speckle over everything.
  for (int64_t i = 0; i < img.size(); ++i) img[i] *= rng.exponential();

  scene.image = std::move(img);
  scene.gt.boxes = Tensor({static_cast<int64_t>(placed.size()), 4});
  for (size_t i = 0; i < placed.size(); ++i) {
    for (int64_t j = 0; j < 4; ++j) scene.gt.boxes[static_cast<int64_t>(i) * 4 + j] = placed[i][static_cast<size_t>(j)];
  }
  scene.gt.labels = labels;
  scene.gt.scores.assign(placed.size(), 1.0);
  return scene;
}

void write_dataset(const std::string& dir, const std::vector<uint64_t>& seeds, int64_t H, int64_t W,
                   int64_t class_count) {
  fs::create_directories(dir);
  char name[64];
  for (size_t i = 0; i < seeds.size(); ++i) {
    const SceneSample scene = gen_scene(seeds[i], H, W, class_count);
    std::snprintf(name, sizeof(name), "scene_%05zu", i);
    io::write_grid(dir + "/" + name + ".grid", scene.image);
    io::write_boxes_csv(dir + "/" + name + ".boxes.csv", scene.gt);
  }
}

std::vector<SceneSample> read_dataset(const std::string& dir) {
  std::vector<fs::path> grids;
  if (!fs::exists(dir)) throw IoError("dataset directory does not exist: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".grid") grids.push_back(entry.path());
  }
  std::sort(grids.begin(), grids.end());
  std::vector<SceneSample> scenes;
  scenes.reserve(grids.size());
  for (const fs::path& g : grids) {
    SceneSample s;
    s.image = io::read_grid(g.string());
    fs::path boxes = g;
    boxes.replace_extension(".boxes.csv");
    s.gt = io::read_boxes_csv(boxes.string());
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace sardet::synth
