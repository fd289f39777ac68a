// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>

namespace sardet::kernels {

// Flat-array inner loops shared by the tensor ops. Every entry has a scalar
// reference implementation; on x86 with AVX2+FMA (or aarch64 with NEON) a
// vectorized variant is selected once at startup. Variants agree with the
// reference up to floating-point reassociation, which the kernel tests bound.
struct Ops {
  double (*dot)(const double* a, const double* b, int64_t n);
  double (*sum)(const double* x, int64_t n);
  void (*axpy)(double a, const double* x, double* y, int64_t n);        // y += a*x
  void (*add)(const double* a, const double* b, double* out, int64_t n);
  void (*sub)(const double* a, const double* b, double* out, int64_t n);
  void (*mul)(const double* a, const double* b, double* out, int64_t n);
  void (*fmadd)(const double* a, const double* b, double* out, int64_t n);  // out += a*b
  void (*scale)(const double* x, double a, double* out, int64_t n);         // out = a*x
  // First-order recurrence step: h = a (*) h + b, elementwise.
  void (*scan_step)(const double* a, const double* b, double* h, int64_t n);
  // Compose affine maps h -> a(*)h+b: (a1,b1) := (a1(*)a2, a2(*)b1 + b2).
  void (*scan_combine)(const double* a2, const double* b2, double* a1, double* b1, int64_t n);
};

const Ops& scalar_ops();
const Ops& active();
const char* active_isa();  // "scalar", "avx2", or "neon"

#if defined(SARDET_HAVE_AVX2)
const Ops& avx2_ops();
bool avx2_supported();
#endif
#if defined(SARDET_HAVE_NEON)
const Ops& neon_ops();
#endif

inline double dot(const double* a, const double* b, int64_t n) { return active().dot(a, b, n); }
inline double sum(const double* x, int64_t n) { return active().sum(x, n); }
inline void axpy(double a, const double* x, double* y, int64_t n) { active().axpy(a, x, y, n); }
inline void add(const double* a, const double* b, double* out, int64_t n) { active().add(a, b, out, n); }
inline void sub(const double* a, const double* b, double* out, int64_t n) { active().sub(a, b, out, n); }
inline void mul(const double* a, const double* b, double* out, int64_t n) { active().mul(a, b, out, n); }
inline void fmadd(const double* a, const double* b, double* out, int64_t n) { active().fmadd(a, b, out, n); }
inline void scale(const double* x, double a, double* out, int64_t n) { active().scale(x, a, out, n); }
inline void scan_step(const double* a, const double* b, double* h, int64_t n) { active().scan_step(a, b, h, n); }
inline void scan_combine(const double* a2, const double* b2, double* a1, double* b1, int64_t n) {
  active().scan_combine(a2, b2, a1, b1, n);
}

}  // namespace sardet::kernels
