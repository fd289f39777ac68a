// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/kernels.hpp"

namespace sardet::kernels {

namespace {

double dot_scalar(const double* a, const double* b, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* x, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_scalar(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void fmadd_scalar(const double* a, const double* b, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void scale_scalar(const double* x, double a, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void scan_step_scalar(const double* a, const double* b, double* h, int64_t n) {
  for (int64_t i = 0; i < n; ++i) h[i] = a[i] * h[i] + b[i];
}

void scan_combine_scalar(const double* a2, const double* b2, double* a1, double* b1, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    b1[i] = a2[i] * b1[i] + b2[i];
    a1[i] = a1[i] * a2[i];
  }
}

const Ops* resolve() {
#if defined(SARDET_HAVE_AVX2)
  if (avx2_supported()) return &avx2_ops();
#endif
#if defined(SARDET_HAVE_NEON)
  return &neon_ops();
#endif
  return &scalar_ops();
}

const char* resolve_name() {
#if defined(SARDET_HAVE_AVX2)
  if (avx2_supported()) return "avx2";
#endif
#if defined(SARDET_HAVE_NEON)
  return "neon";
#endif
  return "scalar";
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {dot_scalar, sum_scalar, axpy_scalar,      add_scalar,
                          sub_scalar, mul_scalar, fmadd_scalar,     scale_scalar,
                          scan_step_scalar, scan_combine_scalar};
  return ops;
}

const Ops& active() {
  static const Ops* ops = resolve();
  return *ops;
}

const char* active_isa() {
  static const char* name = resolve_name();
  return name;
}

}  // namespace sardet::kernels
