// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sardet/gradcheck.hpp"
#include "sardet/nn.hpp"
#include "sardet/suite.hpp"
#include "testutil.hpp"

using namespace sardet;
using ag::Var;
using testutil::max_abs_diff;
using testutil::rand_tensor;

TEST_CASE("linear identity, hand case, zero input") {
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor zero_b({3});
  CHECK(max_abs_diff(nn::linear(x, eye, zero_b), x) == 0.0);

  Tensor x1({1}, {3.0});
  Tensor w1({1, 1}, {2.0});
  Tensor b1({1}, {1.0});
  CHECK(nn::linear(x1, w1, b1)[0] == doctest::Approx(7.0));

  Tensor xz({2, 3});
  Tensor w({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor b({2}, {0.5, -0.25});
  const Tensor y = nn::linear(xz, w, b);
  for (int64_t r = 0; r < 2; ++r) {
    CHECK(y.at(r, 0) == 0.5);
    CHECK(y.at(r, 1) == -0.25);
  }
}

TEST_CASE("linear shape mismatch names both shapes") {
  Tensor x({2, 3});
  Tensor w({4, 2});
  Tensor b({2});
  try {
    nn::linear(x, w, b);
    FAIL("expected DimError");
  } catch (const DimError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,2]") != std::string::npos);
  }
}

TEST_CASE("silu values") {
  Tensor x({3}, {0.0, 20.0, -20.0});
  const Tensor y = nn::silu(x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(20.0).epsilon(1e-7));
  CHECK(std::abs(y[2]) <= 1e-7);
}

TEST_CASE("layer_norm examples") {
  Tensor g({4}, {1, 1, 1, 1});
  Tensor b({4});
  Tensor constant({1, 4}, {3, 3, 3, 3});
  const Tensor y0 = nn::layer_norm(constant, g, b);
  for (int64_t i = 0; i < 4; ++i) CHECK(std::abs(y0[i]) <= 1e-6);

  Tensor g2({2}, {1, 1});
  Tensor b2({2});
  Tensor pm({1, 2}, {1, -1});
  const Tensor y1 = nn::layer_norm(pm, g2, b2);
  CHECK(y1[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(y1[1] == doctest::Approx(-1.0).epsilon(1e-5));

  Rng rng(5);
  Tensor x = rand_tensor({3, 6}, rng);
  Tensor gz({6});
  Tensor beta = rand_tensor({6}, rng);
  const Tensor y2 = nn::layer_norm(x, gz, beta);
  for (int64_t r = 0; r < 3; ++r) {
    for (int64_t c = 0; c < 6; ++c) CHECK(y2.at(r, c) == doctest::Approx(beta[c]));
  }
}

TEST_CASE("layer_norm row statistics property") {
  Rng rng(6);
  Tensor g({8}, {1, 1, 1, 1, 1, 1, 1, 1});
  Tensor b({8});
  for (int inst = 0; inst < 5; ++inst) {
    const Tensor x = rand_tensor({4, 8}, rng, -5.0, 5.0);
    const Tensor y = nn::layer_norm(x, g, b);
    for (int64_t r = 0; r < 4; ++r) {
      double mean = 0.0, var = 0.0;
      for (int64_t c = 0; c < 8; ++c) mean += y.at(r, c);
      mean /= 8.0;
      for (int64_t c = 0; c < 8; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
      var /= 8.0;
      CHECK(std::abs(mean) <= 1e-10);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("softmax_rows examples and invariants") {
  Tensor u({1, 4}, {2.5, 2.5, 2.5, 2.5});
  const Tensor yu = nn::softmax_rows(u);
  for (int64_t i = 0; i < 4; ++i) CHECK(yu[i] == doctest::Approx(0.25).epsilon(1e-12));

  Tensor two({1, 2}, {0.0, std::log(2.0)});
  const Tensor y2 = nn::softmax_rows(two);
  CHECK(y2[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(y2[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  Rng rng(7);
  for (int inst = 0; inst < 5; ++inst) {
    const Tensor x = rand_tensor({3, 7}, rng, -4.0, 4.0);
    const Tensor y = nn::softmax_rows(x);
    Tensor shifted = x;
    for (int64_t r = 0; r < 3; ++r) {
      const double c = rng.uniform(-10.0, 10.0);
      for (int64_t k = 0; k < 7; ++k) shifted.at(r, k) += c;
    }
    const Tensor ys = nn::softmax_rows(shifted);
    CHECK(max_abs_diff(y, ys) <= 1e-12);
    for (int64_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (int64_t k = 0; k < 7; ++k) s += y.at(r, k);
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("conv2d identity kernels and hand case") {
  Rng rng(8);
  const Tensor x = rand_tensor({2, 5, 5}, rng);

  Tensor k1({2, 2, 1, 1});
  k1[0 * 2 + 0] = 1.0;  // (co=0, ci=0)
  k1[1 * 2 + 1] = 1.0;  // (co=1, ci=1)
  Tensor b({2});
  CHECK(max_abs_diff(nn::conv2d(x, k1, b, 1, 0), x) == 0.0);

  Tensor k3({2, 2, 3, 3});
  for (int64_t co = 0; co < 2; ++co) k3[((co * 2 + co) * 3 + 1) * 3 + 1] = 1.0;
  CHECK(max_abs_diff(nn::conv2d(x, k3, b, 1, 1), x) == 0.0);

  Tensor x2({1, 2, 2}, {1, 2, 3, 4});
  Tensor kk({1, 1, 2, 2}, {1, 1, 1, 1});
  Tensor b1({1});
  const Tensor y = nn::conv2d(x2, kk, b1, 1, 0);
  CHECK(y.size() == 1);
  CHECK(y[0] == doctest::Approx(10.0));
}

TEST_CASE("conv2d rejects non-integral output size") {
  Tensor x({1, 6, 6});
  Tensor k({1, 1, 3, 3});
  Tensor b({1});
  CHECK_THROWS_AS(nn::conv2d(x, k, b, 2, 1), DimError);
}

TEST_CASE("conv1d_depthwise delta, constant, zero kernels") {
  Rng rng(9);
  const Tensor x = rand_tensor({6, 3}, rng);
  Tensor delta({3, 3});
  for (int64_t c = 0; c < 3; ++c) delta[c * 3 + 1] = 1.0;
  CHECK(max_abs_diff(nn::conv1d_depthwise(x, delta, 1), x) == 0.0);

  Tensor xc({5, 2});
  for (int64_t t = 0; t < 5; ++t) {
    xc.at(t, 0) = 2.0;
    xc.at(t, 1) = -3.0;
  }
  Tensor ks({2, 3}, {0.5, 1.0, 0.25, -1.0, 2.0, 0.5});
  const Tensor yc = nn::conv1d_depthwise(xc, ks, 1);
  // Interior rows see the full kernel sum.
  for (int64_t t = 1; t < 4; ++t) {
    CHECK(yc.at(t, 0) == doctest::Approx(2.0 * 1.75));
    CHECK(yc.at(t, 1) == doctest::Approx(-3.0 * 1.5));
  }

  Tensor kz({3, 3});
  const Tensor yz = nn::conv1d_depthwise(x, kz, 1);
  CHECK(max_abs_diff(yz, Tensor::zeros({6, 3})) == 0.0);

  Tensor keven({3, 4});
  CHECK_THROWS_AS(nn::conv1d_depthwise(x, keven, 1), ConfigError);
}

TEST_CASE("row-major reshape indexing property") {
  Rng rng(10);
  const Tensor x = rand_tensor({3, 4, 5}, rng);
  const Tensor flat = x.reshaped({60});
  for (int64_t i = 0; i < 3; ++i) {
    for (int64_t j = 0; j < 4; ++j) {
      for (int64_t k = 0; k < 5; ++k) {
        CHECK(flat[(i * 4 + j) * 5 + k] == x[(i * 4 + j) * 5 + k]);
      }
    }
  }
  const Tensor back = flat.reshaped({3, 4, 5});
  CHECK(max_abs_diff(back, x) == 0.0);
  CHECK_THROWS_AS(x.reshaped({7, 9}), DimError);
}

TEST_CASE("values stay finite through composed ops") {
  Rng rng(11);
  const Tensor x = rand_tensor({4, 8}, rng, -3.0, 3.0);
  Tensor g({8}, std::vector<double>(8, 1.0));
  Tensor b({8});
  const Tensor y = nn::softmax_rows(nn::layer_norm(nn::silu(x), g, b));
  CHECK(y.all_finite());
}

TEST_CASE("grad_check passes on a random linear layer") {
  Rng rng(12);
  Var x = Var::param(rand_tensor({3, 4}, rng), "x");
  Var w = Var::param(rand_tensor({4, 2}, rng), "W");
  Var b = Var::param(rand_tensor({2}, rng), "b");
  const auto loss = [&]() {
    Var y = nn::linear(x, w, b);
    return nn::sum_all_v(nn::mul(y, y));
  };
  const auto rep = nn::grad_check(loss, {x, w, b}, 1e-5, 1e-4);
  CHECK(rep.passed);
}

TEST_CASE("grad_check on a zero-weight layer and a constant closure") {
  Rng rng(13);
  Var x = Var::param(rand_tensor({2, 3}, rng), "x");
  Var w = Var::param(Tensor::zeros({3, 3}), "W");
  Var b = Var::param(Tensor::zeros({3}), "b");
  const auto loss = [&]() {
    Var y = nn::linear(x, w, b);
    return nn::sum_all_v(nn::mul(y, y));
  };
  const auto rep = nn::grad_check(loss, {x, w, b}, 1e-5, 1e-4);
  CHECK(rep.passed);

  Var p = Var::param(rand_tensor({4}, rng), "p");
  const auto const_loss = []() { return Var::leaf(Tensor::scalar(2.5)); };
  const auto rep2 = nn::grad_check(const_loss, {p}, 1e-5, 1e-4);
  CHECK(rep2.passed);
  for (const auto& item : rep2.items) CHECK(std::abs(item.analytic) == 0.0);
}

TEST_CASE("gradient suite covers every layer") {
  const auto res = suite::run_gradient_suite(21);
  INFO(res.log);
  CHECK(res.passed);
}
