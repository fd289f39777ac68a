// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sardet::bench {

/// One bench measurement; CSV schema L,S,C,variant,wall_ns. For attention
/// rows L is the token count and S the agent count (0 for plain softmax).
struct Row {
  int64_t L = 0, S = 0, C = 0;
  std::string variant;
  int64_t wall_ns = 0;
};

std::vector<Row> bench_scans(int runs = 3, uint64_t seed = 11);

struct AttnScaling {
  int64_t agent_small = 0, agent_large = 0;      // wall ns, 3-run median
  int64_t softmax_small = 0, softmax_large = 0;
  int64_t n_small = 1024, n_large = 4096;
};

AttnScaling bench_attention_scaling(int64_t n_small = 1024, int64_t n_large = 4096, int64_t channels = 64,
                                    int64_t agents = 16, int runs = 3, uint64_t seed = 13);

std::vector<Row> attention_rows(const AttnScaling& s, int64_t channels, int64_t agents);

void write_csv(std::ostream& os, const std::vector<Row>& rows);

}  // namespace sardet::bench
