// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace sardet::io {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v & 0xffffffffull));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

void put_f32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

// Reader with byte-offset tracking for parse errors.
class Reader {
 public:
  Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path);
  }

  void bytes(void* dst, size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw ParseError(path_ + ": truncated at byte offset " + std::to_string(offset_ + static_cast<size_t>(std::max<std::streamsize>(in_.gcount(), 0))));
    }
    offset_ += n;
  }

  uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) | (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }

  uint64_t u64() {
    const uint64_t lo = u32();
    const uint64_t hi = u32();
    return lo | (hi << 32);
  }

  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void magic(const char* m) {
    char buf[4];
    bytes(buf, 4);
    if (std::memcmp(buf, m, 4) != 0) {
      throw ParseError(path_ + ": bad magic at byte offset 0, expected " + std::string(m, 4));
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  size_t offset_ = 0;
};

}  // namespace

void write_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write("MDK1", 4);
  put_u32(os, static_cast<uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
  for (int64_t i = 0; i < t.size(); ++i) put_f64(os, t[i]);
  if (!os) throw IoError("write failed: " + path);
}

Tensor read_tensor(const std::string& path) {
  Reader r(path);
  r.magic("MDK1");
  const uint32_t rank = r.u32();
  if (rank == 0 || rank > 8) throw ParseError(path + ": unreasonable tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    shape[i] = static_cast<int64_t>(r.u32());
    if (shape[i] <= 0) throw ParseError(path + ": zero tensor dimension");
  }
  Tensor t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = r.f64();
  return t;
}

void write_grid(const std::string& path, const Tensor& img) {
  int64_t h, w;
  if (img.rank() == 3 && img.dim(0) == 1) {
    h = img.dim(1);
    w = img.dim(2);
  } else if (img.rank() == 2) {
    h = img.dim(0);
    w = img.dim(1);
  } else {
    throw DimError("write_grid: expected [1,H,W] or [H,W], got " + shape_str(img.shape()));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write("MDG1", 4);
  put_u32(os, static_cast<uint32_t>(h));
  put_u32(os, static_cast<uint32_t>(w));
  for (int64_t i = 0; i < h * w; ++i) put_f32(os, static_cast<float>(img[i]));
  if (!os) throw IoError("write failed: " + path);
}

Tensor read_grid(const std::string& path) {
  Reader r(path);
  r.magic("MDG1");
  const int64_t h = static_cast<int64_t>(r.u32());
  const int64_t w = static_cast<int64_t>(r.u32());
  if (h <= 0 || w <= 0) throw ParseError(path + ": empty grid dimensions");
  Tensor img({1, h, w});
  for (int64_t i = 0; i < h * w; ++i) img[i] = static_cast<double>(r.f32());
  return img;
}

void write_boxes_csv(const std::string& path, const BoxSet& boxes) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << "class,cx,cy,w,h\n";
  char line[256];
  for (int64_t i = 0; i < boxes.size(); ++i) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", boxes.labels[static_cast<size_t>(i)],
                  boxes.boxes[i * 4], boxes.boxes[i * 4 + 1], boxes.boxes[i * 4 + 2], boxes.boxes[i * 4 + 3]);
    os << line;
  }
}

BoxSet read_boxes_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
  if (line != "class,cx,cy,w,h") throw ParseError(path + ":1: expected header class,cx,cy,w,h");
  std::vector<std::array<double, 4>> rows;
  std::vector<int> labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::array<double, 5> vals{};
    for (int f = 0; f < 5; ++f) {
      if (!std::getline(ss, field, ',')) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
      }
      try {
        vals[static_cast<size_t>(f)] = std::stod(field);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    labels.push_back(static_cast<int>(vals[0]));
    rows.push_back({vals[1], vals[2], vals[3], vals[4]});
  }
  BoxSet out;
  if (!rows.empty()) {
    out.boxes = Tensor({static_cast<int64_t>(rows.size()), 4});
    for (size_t i = 0; i < rows.size(); ++i) {
      for (int64_t j = 0; j < 4; ++j) out.boxes[static_cast<int64_t>(i) * 4 + j] = rows[i][static_cast<size_t>(j)];
    }
    out.labels = std::move(labels);
    out.scores.assign(rows.size(), 1.0);
  }
  return out;
}

void save_checkpoint(const std::string& dir, const ParamStore& params) {
  fs::create_directories(dir);
  std::ofstream manifest(dir + "/manifest.txt");
  if (!manifest) throw IoError("cannot write " + dir + "/manifest.txt");
  for (const ag::Var& p : params.all()) {
    manifest << p.name();
    for (int i = 0; i < p.val().rank(); ++i) manifest << " " << p.val().dim(i);
    manifest << "\n";
    write_tensor(dir + "/" + p.name() + ".tsr", p.val());
  }
}

void load_checkpoint(const std::string& dir, ParamStore& params) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw IoError("cannot open " + dir + "/manifest.txt");
  std::string line;
  size_t entries = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string name;
    ss >> name;
    Shape shape;
    int64_t d;
    while (ss >> d) shape.push_back(d);
    if (name.empty() || shape.empty()) throw ParseError(dir + "/manifest.txt: malformed line '" + line + "'");
    if (!params.contains(name)) {
      throw ConfigError("checkpoint parameter '" + name + "' does not exist in this model");
    }
    ag::Var p = params.find(name);
    if (p.val().shape() != shape) {
      throw ConfigError("checkpoint shape " + shape_str(shape) + " for '" + name + "' does not match model shape " +
                        shape_str(p.val().shape()));
    }
    Tensor t = read_tensor(dir + "/" + name + ".tsr");
    if (t.shape() != shape) {
      throw ConfigError("tensor file shape " + shape_str(t.shape()) + " for '" + name +
                        "' does not match manifest " + shape_str(shape));
    }
    p.mutable_val() = std::move(t);
    ++entries;
  }
  if (entries != params.all().size()) {
    throw ConfigError("checkpoint has " + std::to_string(entries) + " parameters, model expects " +
                      std::to_string(params.all().size()));
  }
}

void write_pgm_overlay(const std::string& path, const Tensor& img, const BoxSet& dets) {
  if (img.rank() != 3 || img.dim(0) != 1) throw DimError("write_pgm_overlay: expected image [1,H,W]");
  const int64_t h = img.dim(1), w = img.dim(2);
  // Robust display scale: 99th percentile of intensities.
  std::vector<double> sorted(img.data(), img.data() + img.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<int64_t>(0.99 * static_cast<double>(sorted.size())),
                   sorted.end());
  const double hi = std::max(sorted[static_cast<size_t>(0.99 * static_cast<double>(sorted.size()))], 1e-9);
  std::vector<unsigned char> pix(static_cast<size_t>(h * w));
  for (int64_t i = 0; i < h * w; ++i) {
    pix[static_cast<size_t>(i)] = static_cast<unsigned char>(std::clamp(img[i] / hi * 255.0, 0.0, 255.0));
  }
  auto draw_h = [&](int64_t y, int64_t x0, int64_t x1) {
    if (y < 0 || y >= h) return;
    for (int64_t x = std::max<int64_t>(0, x0); x <= std::min(w - 1, x1); ++x) pix[static_cast<size_t>(y * w + x)] = 255;
  };
  auto draw_v = [&](int64_t x, int64_t y0, int64_t y1) {
    if (x < 0 || x >= w) return;
    for (int64_t y = std::max<int64_t>(0, y0); y <= std::min(h - 1, y1); ++y) pix[static_cast<size_t>(y * w + x)] = 255;
  };
  for (int64_t i = 0; i < dets.size(); ++i) {
    const double cx = dets.boxes[i * 4], cy = dets.boxes[i * 4 + 1];
    const double bw = dets.boxes[i * 4 + 2], bh = dets.boxes[i * 4 + 3];
    const int64_t x0 = static_cast<int64_t>((cx - bw / 2) * static_cast<double>(w));
    const int64_t x1 = static_cast<int64_t>((cx + bw / 2) * static_cast<double>(w));
    const int64_t y0 = static_cast<int64_t>((cy - bh / 2) * static_cast<double>(h));
    const int64_t y1 = static_cast<int64_t>((cy + bh / 2) * static_cast<double>(h));
    draw_h(y0, x0, x1);
    draw_h(y1, x0, x1);
    draw_v(x0, y0, y1);
    draw_v(x1, y0, y1);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os << "P5\n" << w << " " << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
}

}  // namespace sardet::io
