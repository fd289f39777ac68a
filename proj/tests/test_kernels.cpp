// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sardet/kernels.hpp"
#include "sardet/rng.hpp"

namespace kk = sardet::kernels;
using sardet::Rng;

namespace {

std::vector<double> rand_vec(int64_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

const int64_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 33, 100, 1024};

}  // namespace

TEST_CASE("active dispatch is resolved") {
  const char* isa = kk::active_isa();
  CHECK((std::string(isa) == "scalar" || std::string(isa) == "avx2" || std::string(isa) == "neon"));
}

TEST_CASE("dot and sum match the scalar reference") {
  Rng rng(1);
  for (int64_t n : kSizes) {
    const auto a = rand_vec(n, rng);
    const auto b = rand_vec(n, rng);
    const double d_ref = kk::scalar_ops().dot(a.data(), b.data(), n);
    const double d_act = kk::active().dot(a.data(), b.data(), n);
    CHECK(std::abs(d_ref - d_act) <= 1e-12 * (1.0 + std::abs(d_ref)));
    const double s_ref = kk::scalar_ops().sum(a.data(), n);
    const double s_act = kk::active().sum(a.data(), n);
    CHECK(std::abs(s_ref - s_act) <= 1e-12 * (1.0 + std::abs(s_ref)));
  }
}

TEST_CASE("elementwise kernels match the scalar reference") {
  Rng rng(2);
  for (int64_t n : kSizes) {
    const auto a = rand_vec(n, rng);
    const auto b = rand_vec(n, rng);
    std::vector<double> r1(static_cast<size_t>(n)), r2(static_cast<size_t>(n));

    kk::scalar_ops().add(a.data(), b.data(), r1.data(), n);
    kk::active().add(a.data(), b.data(), r2.data(), n);
    CHECK(r1 == r2);

    kk::scalar_ops().sub(a.data(), b.data(), r1.data(), n);
    kk::active().sub(a.data(), b.data(), r2.data(), n);
    CHECK(r1 == r2);

    kk::scalar_ops().mul(a.data(), b.data(), r1.data(), n);
    kk::active().mul(a.data(), b.data(), r2.data(), n);
    CHECK(r1 == r2);

    kk::scalar_ops().scale(a.data(), 1.7, r1.data(), n);
    kk::active().scale(a.data(), 1.7, r2.data(), n);
    CHECK(r1 == r2);
  }
}

TEST_CASE("fused multiply-add kernels agree within fma rounding") {
  Rng rng(3);
  for (int64_t n : kSizes) {
    const auto a = rand_vec(n, rng);
    const auto b = rand_vec(n, rng);
    auto y1 = rand_vec(n, rng);
    auto y2 = y1;

    kk::scalar_ops().axpy(0.37, a.data(), y1.data(), n);
    kk::active().axpy(0.37, a.data(), y2.data(), n);
    for (int64_t i = 0; i < n; ++i) CHECK(y1[static_cast<size_t>(i)] == doctest::Approx(y2[static_cast<size_t>(i)]).epsilon(1e-14));

    auto o1 = rand_vec(n, rng);
    auto o2 = o1;
    kk::scalar_ops().fmadd(a.data(), b.data(), o1.data(), n);
    kk::active().fmadd(a.data(), b.data(), o2.data(), n);
    for (int64_t i = 0; i < n; ++i) CHECK(o1[static_cast<size_t>(i)] == doctest::Approx(o2[static_cast<size_t>(i)]).epsilon(1e-14));
  }
}

TEST_CASE("scan kernels agree with the reference semantics") {
  Rng rng(4);
  for (int64_t n : kSizes) {
    const auto a = rand_vec(n, rng, 0.1, 0.9);
    const auto b = rand_vec(n, rng);
    auto h1 = rand_vec(n, rng);
    auto h2 = h1;
    kk::scalar_ops().scan_step(a.data(), b.data(), h1.data(), n);
    kk::active().scan_step(a.data(), b.data(), h2.data(), n);
    for (int64_t i = 0; i < n; ++i) CHECK(h1[static_cast<size_t>(i)] == doctest::Approx(h2[static_cast<size_t>(i)]).epsilon(1e-14));

    const auto a2 = rand_vec(n, rng, 0.1, 0.9);
    const auto b2 = rand_vec(n, rng);
    auto ca1 = a;
    auto cb1 = b;
    auto ca2 = a;
    auto cb2 = b;
    kk::scalar_ops().scan_combine(a2.data(), b2.data(), ca1.data(), cb1.data(), n);
    kk::active().scan_combine(a2.data(), b2.data(), ca2.data(), cb2.data(), n);
    for (int64_t i = 0; i < n; ++i) {
      CHECK(ca1[static_cast<size_t>(i)] == doctest::Approx(ca2[static_cast<size_t>(i)]).epsilon(1e-14));
      CHECK(cb1[static_cast<size_t>(i)] == doctest::Approx(cb2[static_cast<size_t>(i)]).epsilon(1e-14));
    }
  }
}

TEST_CASE("scan_step semantics: h = a*h + b") {
  const double a[3] = {0.5, 2.0, 0.0};
  const double b[3] = {1.0, -1.0, 3.0};
  double h[3] = {4.0, 1.0, 7.0};
  kk::scan_step(a, b, h, 3);
  CHECK(h[0] == doctest::Approx(3.0));
  CHECK(h[1] == doctest::Approx(1.0));
  CHECK(h[2] == doctest::Approx(3.0));
}
