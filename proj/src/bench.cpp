// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include "sardet/attention.hpp"
#include "sardet/ssm.hpp"

namespace sardet::bench {

namespace {

using Clock = std::chrono::steady_clock;

Tensor rand_t(Shape s, Rng& rng) {
  Tensor t(std::move(s));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

template <typename F>
int64_t median_ns(F&& fn, int runs) {
  std::vector<int64_t> times;
  times.reserve(static_cast<size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

volatile double g_sink = 0.0;

}  // namespace

std::vector<Row> bench_scans(int runs, uint64_t seed) {
  std::vector<Row> rows;
  Rng rng(seed);
  for (int64_t L : {1, 2, 7, 64, 1024}) {
    for (int64_t C : {1, 8}) {
      for (int64_t S : {1, 4, 16}) {
        Rng init = rng.fork(static_cast<uint64_t>(L * 1000 + C * 100 + S));
        const ssm::SsmParams p = ssm::SsmParams::init(C, S, init);
        const Tensor u = rand_t({L, C}, rng);
        Row seq;
        seq.L = L;
        seq.S = S;
        seq.C = C;
        seq.variant = "seq";
        seq.wall_ns = median_ns([&]() { g_sink = ssm::s6_scan_seq(u, p)[0]; }, runs);
        rows.push_back(seq);
        Row par = seq;
        par.variant = "parallel";
        par.wall_ns = median_ns([&]() { g_sink = ssm::s6_scan_parallel(u, p, 64)[0]; }, runs);
        rows.push_back(par);
      }
    }
  }
  return rows;
}

AttnScaling bench_attention_scaling(int64_t n_small, int64_t n_large, int64_t channels, int64_t agents, int runs,
                                    uint64_t seed) {
  Rng rng(seed);
  AttnScaling out;
  out.n_small = n_small;
  out.n_large = n_large;
  for (int which = 0; which < 2; ++which) {
    const int64_t n = which == 0 ? n_small : n_large;
    const Tensor q = rand_t({n, channels}, rng);
    const Tensor k = rand_t({n, channels}, rng);
    const Tensor v = rand_t({n, channels}, rng);
    const Tensor a = attn::agent_pool(q, agents);
    const int64_t agent_ns = median_ns([&]() { g_sink = attn::agent_attention(q, k, v, a, 1)[0]; }, runs);
    const int64_t soft_ns = median_ns([&]() { g_sink = attn::softmax_attention(q, k, v, 1)[0]; }, runs);
    if (which == 0) {
      out.agent_small = agent_ns;
      out.softmax_small = soft_ns;
    } else {
      out.agent_large = agent_ns;
      out.softmax_large = soft_ns;
    }
  }
  return out;
}

std::vector<Row> attention_rows(const AttnScaling& s, int64_t channels, int64_t agents) {
  std::vector<Row> rows;
  rows.push_back({s.n_small, agents, channels, "agent", s.agent_small});
  rows.push_back({s.n_large, agents, channels, "agent", s.agent_large});
  rows.push_back({s.n_small, 0, channels, "softmax", s.softmax_small});
  rows.push_back({s.n_large, 0, channels, "softmax", s.softmax_large});
  return rows;
}

void write_csv(std::ostream& os, const std::vector<Row>& rows) {
  os << "L,S,C,variant,wall_ns\n";
  for (const Row& r : rows) {
    os << r.L << "," << r.S << "," << r.C << "," << r.variant << "," << r.wall_ns << "\n";
  }
}

}  // namespace sardet::bench
