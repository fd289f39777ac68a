// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>

namespace sardet {

/// Deterministic xoshiro256++ stream. Self-contained so outputs are
/// reproducible across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double a, double b);     // [a, b)
  int64_t uniform_int(int64_t lo, int64_t hi);  // inclusive range
  double normal();                        // standard normal (Box-Muller)
  double exponential();                   // mean 1

  /// Independent stream derived from this rng's seed and a stream id.
  Rng fork(uint64_t stream) const;

 private:
  uint64_t seed_;
  std::array<uint64_t, 4> s_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sardet
