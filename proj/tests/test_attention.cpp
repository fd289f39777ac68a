// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sardet/attention.hpp"
#include "sardet/nn.hpp"
#include "testutil.hpp"

using namespace sardet;
using ag::Var;
using testutil::max_abs_diff;
using testutil::rand_tensor;

TEST_CASE("single key: every output row equals V's row") {
  Rng rng(1);
  const Tensor q = rand_tensor({5, 4}, rng);
  const Tensor k = rand_tensor({1, 4}, rng);
  const Tensor v = rand_tensor({1, 6}, rng);
  const Tensor out = attn::softmax_attention(q, k, v, 1);
  for (int64_t i = 0; i < 5; ++i) {
    for (int64_t j = 0; j < 6; ++j) CHECK(out.at(i, j) == doctest::Approx(v[j]).epsilon(1e-12));
  }
}

TEST_CASE("identical value rows collapse to that row") {
  Rng rng(2);
  const Tensor q = rand_tensor({4, 4}, rng);
  const Tensor k = rand_tensor({6, 4}, rng);
  Tensor v({6, 4});
  for (int64_t i = 0; i < 6; ++i) {
    for (int64_t j = 0; j < 4; ++j) v.at(i, j) = 0.5 * static_cast<double>(j) - 1.0;
  }
  for (int64_t heads : {1, 2}) {
    const Tensor out = attn::softmax_attention(q, k, v, heads);
    for (int64_t i = 0; i < 4; ++i) {
      for (int64_t j = 0; j < 4; ++j) CHECK(out.at(i, j) == doctest::Approx(v.at(0, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("two-token single-head closed form") {
  // Q = K = I2 * s, V rows v0, v1; row 0 weights softmax(s^2/sqrt(2), 0).
  const double s = 1.5;
  Tensor q({2, 2}, {s, 0, 0, s});
  Tensor k = q;
  Tensor v({2, 2}, {1.0, 2.0, -3.0, 0.5});
  const Tensor out = attn::softmax_attention(q, k, v, 1);
  const double logit = s * s / std::sqrt(2.0);
  const double w_same = std::exp(logit) / (std::exp(logit) + 1.0);
  for (int64_t j = 0; j < 2; ++j) {
    CHECK(out.at(0, j) == doctest::Approx(w_same * v.at(0, j) + (1 - w_same) * v.at(1, j)).epsilon(1e-12));
    CHECK(out.at(1, j) == doctest::Approx(w_same * v.at(1, j) + (1 - w_same) * v.at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("agent_pool segment means") {
  Rng rng(3);
  const Tensor q = rand_tensor({4, 3}, rng);
  CHECK(max_abs_diff(attn::agent_pool(q, 4), q) == 0.0);

  const Tensor mean1 = attn::agent_pool(q, 1);
  for (int64_t j = 0; j < 3; ++j) {
    double m = 0.0;
    for (int64_t i = 0; i < 4; ++i) m += q.at(i, j);
    CHECK(mean1.at(0, j) == doctest::Approx(m / 4.0).epsilon(1e-12));
  }

  const Tensor two = attn::agent_pool(q, 2);
  for (int64_t j = 0; j < 3; ++j) {
    CHECK(two.at(0, j) == doctest::Approx((q.at(0, j) + q.at(1, j)) / 2.0).epsilon(1e-12));
    CHECK(two.at(1, j) == doctest::Approx((q.at(2, j) + q.at(3, j)) / 2.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(attn::agent_pool(q, 5), ConfigError);
  // Remainder spreads over leading segments: 5 rows over 2 segments = 3 + 2.
  const Tensor q5 = rand_tensor({5, 2}, rng);
  const Tensor seg = attn::agent_pool(q5, 2);
  CHECK(seg.at(0, 0) == doctest::Approx((q5.at(0, 0) + q5.at(1, 0) + q5.at(2, 0)) / 3.0));
  CHECK(seg.at(1, 0) == doctest::Approx((q5.at(3, 0) + q5.at(4, 0)) / 2.0));
}

TEST_CASE("agent attention with one agent broadcasts a single row") {
  Rng rng(4);
  const Tensor q = rand_tensor({5, 4}, rng);
  const Tensor k = rand_tensor({7, 4}, rng);
  const Tensor v = rand_tensor({7, 4}, rng);
  const Tensor a = attn::agent_pool(q, 1);
  const Tensor va = attn::softmax_attention(a, k, v, 1);
  const Tensor out = attn::agent_attention(q, k, v, a, 1);
  for (int64_t i = 0; i < 5; ++i) {
    for (int64_t j = 0; j < 4; ++j) CHECK(out.at(i, j) == doctest::Approx(va.at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("double convexity: constant values pass through agent attention") {
  Rng rng(5);
  const Tensor q = rand_tensor({6, 4}, rng);
  const Tensor k = rand_tensor({8, 4}, rng);
  Tensor v({8, 4});
  for (int64_t i = 0; i < 8; ++i) {
    for (int64_t j = 0; j < 4; ++j) v.at(i, j) = 1.0 - 0.3 * static_cast<double>(j);
  }
  const Tensor a = attn::agent_pool(q, 3);
  const Tensor out = attn::agent_attention(q, k, v, a, 2);
  for (int64_t i = 0; i < 6; ++i) {
    for (int64_t j = 0; j < 4; ++j) CHECK(out.at(i, j) == doctest::Approx(v.at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("query permutation permutes outputs exactly") {
  Rng rng(6);
  const Tensor q = rand_tensor({6, 4}, rng);
  const Tensor k = rand_tensor({5, 4}, rng);
  const Tensor v = rand_tensor({5, 4}, rng);
  const Tensor a = attn::agent_pool(q, 2);
  const std::vector<int64_t> perm = {3, 0, 5, 1, 4, 2};
  const Tensor qp = nn::permute_rows(q, perm);

  const Tensor out = attn::agent_attention(q, k, v, a, 2);
  const Tensor outp = attn::agent_attention(qp, k, v, a, 2);
  CHECK(max_abs_diff(outp, nn::permute_rows(out, perm)) == 0.0);

  const Tensor s_out = attn::softmax_attention(q, k, v, 2);
  const Tensor s_outp = attn::softmax_attention(qp, k, v, 2);
  CHECK(max_abs_diff(s_outp, nn::permute_rows(s_out, perm)) == 0.0);
}

TEST_CASE("outputs stay in the per-head convex hull of V rows") {
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const int64_t heads = 2;
    const Tensor q = rand_tensor({6, 4}, rng);
    const Tensor k = rand_tensor({9, 4}, rng);
    const Tensor v = rand_tensor({9, 4}, rng);
    const Tensor a = attn::agent_pool(q, 3);
    for (const Tensor& out : {attn::softmax_attention(q, k, v, heads), attn::agent_attention(q, k, v, a, heads)}) {
      for (int64_t i = 0; i < out.dim(0); ++i) {
        for (int64_t j = 0; j < 4; ++j) {
          double lo = 1e30, hi = -1e30;
          for (int64_t r = 0; r < 9; ++r) {
            lo = std::min(lo, v.at(r, j));
            hi = std::max(hi, v.at(r, j));
          }
          CHECK(out.at(i, j) >= lo - 1e-10);
          CHECK(out.at(i, j) <= hi + 1e-10);
        }
      }
    }
  }
}

TEST_CASE("Var attention path matches the streaming tensor path") {
  Rng rng(8);
  const Tensor q = rand_tensor({6, 4}, rng);
  const Tensor k = rand_tensor({5, 4}, rng);
  const Tensor v = rand_tensor({5, 4}, rng);
  for (int64_t heads : {1, 2}) {
    const Tensor t_out = attn::softmax_attention(q, k, v, heads);
    const Tensor v_out = attn::softmax_attention(Var::leaf(q), Var::leaf(k), Var::leaf(v), heads).val();
    CHECK(max_abs_diff(t_out, v_out) <= 1e-12);
  }
}

TEST_CASE("attention dimension errors") {
  Rng rng(9);
  const Tensor q = rand_tensor({4, 4}, rng);
  const Tensor k = rand_tensor({5, 3}, rng);
  const Tensor v = rand_tensor({5, 4}, rng);
  CHECK_THROWS_AS(attn::softmax_attention(q, k, v, 1), DimError);
  const Tensor k2 = rand_tensor({6, 4}, rng);
  CHECK_THROWS_AS(attn::softmax_attention(q, k2, v, 1), DimError);
  CHECK_THROWS_AS(attn::softmax_attention(q, rand_tensor({5, 4}, rng), v, 3), DimError);
  const Tensor bad_agents = rand_tensor({2, 3}, rng);
  CHECK_THROWS_AS(attn::agent_attention(q, rand_tensor({5, 4}, rng), v, bad_agents, 1), DimError);
}
