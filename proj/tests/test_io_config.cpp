// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sardet/config.hpp"
#include "sardet/io.hpp"
#include "testutil.hpp"

using namespace sardet;
using testutil::max_abs_diff;
using testutil::rand_tensor;

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("sardet_io_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("tensor container round trip and header layout") {
  const fs::path dir = temp_dir("tensor");
  Rng rng(1);
  const Tensor t = rand_tensor({2, 3, 4}, rng);
  const std::string path = (dir / "t.tsr").string();
  io::write_tensor(path, t);

  // Header: magic MDK1, u32 rank, u32 dims, little-endian doubles.
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 4 + 4 + 3 * 4 + 24 * 8);
  CHECK(bytes[0] == 'M');
  CHECK(bytes[1] == 'D');
  CHECK(bytes[2] == 'K');
  CHECK(bytes[3] == '1');
  CHECK(bytes[4] == 3);  // rank, little-endian
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 2);   // dim 0
  CHECK(bytes[12] == 3);  // dim 1
  CHECK(bytes[16] == 4);  // dim 2

  const Tensor back = io::read_tensor(path);
  CHECK(back.shape() == t.shape());
  CHECK(max_abs_diff(back, t) == 0.0);

  // Truncation reports a byte offset.
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), 40);
  out.close();
  try {
    io::read_tensor(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("grid container round trip") {
  const fs::path dir = temp_dir("grid");
  Rng rng(2);
  const Tensor img = rand_tensor({1, 6, 8}, rng, 0.0, 4.0);
  const std::string path = (dir / "g.grid").string();
  io::write_grid(path, img);
  const Tensor back = io::read_grid(path);
  CHECK(back.shape() == Shape{1, 6, 8});
  CHECK(max_abs_diff(back, img) <= 1e-6);  // f32 storage

  std::ofstream bad((dir / "bad.grid").string(), std::ios::binary);
  bad.write("XXXX", 4);
  bad.close();
  CHECK_THROWS_AS(io::read_grid((dir / "bad.grid").string()), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("boxes csv round trip and parse errors") {
  const fs::path dir = temp_dir("boxes");
  BoxSet s;
  s.boxes = Tensor({2, 4}, {0.25, 0.5, 0.125, 0.0625, 0.75, 0.3, 0.2, 0.1});
  s.labels = {2, 0};
  s.scores = {1.0, 1.0};
  const std::string path = (dir / "b.csv").string();
  io::write_boxes_csv(path, s);
  const BoxSet back = io::read_boxes_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(max_abs_diff(back.boxes, s.boxes) == 0.0);
  CHECK(back.labels == s.labels);

  std::ofstream bad((dir / "bad.csv").string());
  bad << "class,cx,cy,w,h\n1,0.5,0.5,oops,0.1\n";
  bad.close();
  try {
    io::read_boxes_csv((dir / "bad.csv").string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  std::ofstream hdr((dir / "hdr.csv").string());
  hdr << "cx,cy\n";
  hdr.close();
  CHECK_THROWS_AS(io::read_boxes_csv((dir / "hdr.csv").string()), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint save/load with shape validation") {
  const fs::path dir = temp_dir("ckpt");
  Rng rng(3);
  ParamStore a;
  a.add("w1", rand_tensor({3, 4}, rng));
  a.add("b1", rand_tensor({4}, rng));
  io::save_checkpoint(dir.string(), a);

  ParamStore b;
  b.add("w1", Tensor::zeros({3, 4}));
  b.add("b1", Tensor::zeros({4}));
  io::load_checkpoint(dir.string(), b);
  CHECK(max_abs_diff(b.find("w1").val(), a.find("w1").val()) == 0.0);
  CHECK(max_abs_diff(b.find("b1").val(), a.find("b1").val()) == 0.0);

  ParamStore wrong_shape;
  wrong_shape.add("w1", Tensor::zeros({4, 3}));
  wrong_shape.add("b1", Tensor::zeros({4}));
  CHECK_THROWS_AS(io::load_checkpoint(dir.string(), wrong_shape), ConfigError);

  ParamStore missing;
  missing.add("w1", Tensor::zeros({3, 4}));
  missing.add("b1", Tensor::zeros({4}));
  missing.add("extra", Tensor::zeros({2}));
  CHECK_THROWS_AS(io::load_checkpoint(dir.string(), missing), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("pgm overlay header and box pixels") {
  const fs::path dir = temp_dir("pgm");
  Tensor img({1, 16, 16});
  for (int64_t i = 0; i < img.size(); ++i) img[i] = 0.5;
  BoxSet dets;
  dets.boxes = Tensor({1, 4}, {0.5, 0.5, 0.5, 0.5});
  dets.labels = {0};
  dets.scores = {0.9};
  const std::string path = (dir / "o.pgm").string();
  io::write_pgm_overlay(path, img, dets);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  CHECK(magic == "P5");
  CHECK(w == 16);
  CHECK(h == 16);
  CHECK(maxv == 255);
  in.get();
  std::vector<unsigned char> pix(16 * 16);
  in.read(reinterpret_cast<char*>(pix.data()), 256);
  // The outline row contains max-intensity pixels.
  bool has_max = false;
  for (unsigned char p : pix) has_max |= (p == 255);
  CHECK(has_max);
  fs::remove_all(dir);
}

TEST_CASE("config parsing, defaults, comments, and unknown keys") {
  const fs::path dir = temp_dir("config");
  const std::string path = (dir / "c.cfg").string();
  {
    std::ofstream os(path);
    os << "# run configuration\n";
    os << "seed = 9\n";
    os << "T = 500\n";
    os << "steps = 500,250,100   # three-step sampler\n";
    os << "agent_n = 8\n";
    os << "lr = 3e-4\n";
  }
  const Config cfg = Config::from_file(path);
  CHECK(cfg.seed == 9);
  CHECK(cfg.T == 500);
  CHECK(cfg.steps == std::vector<int64_t>{500, 250, 100});
  CHECK(cfg.agent_n == 8);
  CHECK(cfg.lr == doctest::Approx(3e-4));
  CHECK(cfg.classes == 3);  // untouched default

  {
    std::ofstream os(path);
    os << "learning_rate = 1\n";
  }
  try {
    Config::from_file(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }

  {
    std::ofstream os(path);
    os << "steps = 100,200\n";  // not decreasing
  }
  CHECK_THROWS_AS(Config::from_file(path), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("config enforces the hybrid-pattern guard") {
  Config cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.mixer_pattern = "MMAAMA";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.allow_custom_pattern = true;
  CHECK_NOTHROW(cfg.validate());
}
