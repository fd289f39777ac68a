// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
// NEON variants (2-wide f64) for aarch64, where NEON is baseline.
#include "sardet/kernels.hpp"

#if defined(SARDET_HAVE_NEON)

#include <arm_neon.h>

namespace sardet::kernels {

namespace {

double dot_neon(const double* a, const double* b, int64_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_neon(const double* x, int64_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

void axpy_neon(double a, const double* x, double* y, int64_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_neon(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_neon(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_neon(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void fmadd_neon(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(out + i), vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

void scale_neon(const double* x, double a, double* out, int64_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(av, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = a * x[i];
}

void scan_step_neon(const double* a, const double* b, double* h, int64_t n) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(h + i, vfmaq_f64(vld1q_f64(b + i), vld1q_f64(a + i), vld1q_f64(h + i)));
  }
  for (; i < n; ++i) h[i] = a[i] * h[i] + b[i];
}

void scan_combine_neon(const double* a2, const double* b2, double* a1, double* b1, int64_t n) {
  int64_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a2v = vld1q_f64(a2 + i);
    vst1q_f64(b1 + i, vfmaq_f64(vld1q_f64(b2 + i), a2v, vld1q_f64(b1 + i)));
    vst1q_f64(a1 + i, vmulq_f64(vld1q_f64(a1 + i), a2v));
  }
  for (; i < n; ++i) {
    b1[i] = a2[i] * b1[i] + b2[i];
    a1[i] = a1[i] * a2[i];
  }
}

}  // namespace

const Ops& neon_ops() {
  static const Ops ops = {dot_neon, sum_neon, axpy_neon,      add_neon,
                          sub_neon, mul_neon, fmadd_neon,     scale_neon,
                          scan_step_neon, scan_combine_neon};
  return ops;
}

}  // namespace sardet::kernels

#endif  // SARDET_HAVE_NEON
