// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <vector>

#include "sardet/autograd.hpp"
#include "sardet/rng.hpp"
#include "sardet/tensor.hpp"

namespace sardet::nn {

using ag::Var;

// ---------------------------------------------------------------------------
// Pure tensor-level forwards. The Var overloads below compute the same values
// and record the reverse pass.
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double a);

// C[m,n] = A[m,k] * B[k,n]; _nt takes B[n,k] transposed, _tn takes A[k,m].
Tensor matmul(const Tensor& A, const Tensor& B);
Tensor matmul_nt(const Tensor& A, const Tensor& B);
Tensor matmul_tn(const Tensor& A, const Tensor& B);

/// y[..., j] = sum_i x[..., i] * W[i, j] + b[j]
Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b);
Tensor silu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
/// Per last-axis row: (x - mean) / sqrt(var + eps) * gamma + beta, with
/// population variance.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
/// Rows of the last axis become exp(x - max) / sum(exp(x - max)).
Tensor softmax_rows(const Tensor& x);

/// Cross-correlation of x[C_in,H,W] with k[C_out,C_in,kh,kw], zero padding.
/// Output size (H + 2*pad - kh) / stride + 1 must be integral.
Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& b, int stride, int pad);
/// Per-channel 1-d cross-correlation along the sequence axis of x[L,C] with
/// k[C,kw]; kw must be odd and pad = (kw-1)/2 so length is preserved.
Tensor conv1d_depthwise(const Tensor& x, const Tensor& k, int pad);

Tensor upsample2x(const Tensor& x);                      // [C,H,W] nearest-neighbor
Tensor chw_to_tokens(const Tensor& x);                   // [C,H,W] -> [H*W, C]
Tensor tokens_to_chw(const Tensor& x, int64_t H, int64_t W);
/// out[t, :] = x[src[t], :]; src must be a permutation of row indices.
Tensor permute_rows(const Tensor& x, const std::vector<int64_t>& src);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, int64_t off, int64_t len);
/// Means of n contiguous row segments of near-equal length (the remainder is
/// spread over the leading segments).
Tensor segment_mean_rows(const Tensor& x, int64_t n);
std::vector<int64_t> segment_sizes(int64_t rows, int64_t n);

double sum_all(const Tensor& x);
double mean_all(const Tensor& x);
double cross_entropy_mean(const Tensor& logits, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Var overloads (forwards identical, backward recorded on the tape).
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double a);
Var matmul(const Var& A, const Var& B);
Var matmul_nt(const Var& A, const Var& B);
Var linear(const Var& x, const Var& W, const Var& b);
Var silu(const Var& x);
Var softplus(const Var& x);
Var exp(const Var& x);
Var neg_exp(const Var& x);  // -exp(x)
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var softmax_rows(const Var& x);
Var conv2d(const Var& x, const Var& k, const Var& b, int stride, int pad);
Var conv1d_depthwise(const Var& x, const Var& k, int pad);
Var upsample2x(const Var& x);
Var chw_to_tokens(const Var& x);
Var tokens_to_chw(const Var& x, int64_t H, int64_t W);
Var permute_rows(const Var& x, std::vector<int64_t> src);
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& x, int64_t off, int64_t len);
Var segment_mean_rows(const Var& x, int64_t n);
Var reshape(const Var& x, Shape s);
Var sum_all_v(const Var& x);
Var mean_all_v(const Var& x);
Var stack_rows(const std::vector<Var>& rows);  // rank-1 rows [D] -> [N,D]
Var cross_entropy_mean(const Var& logits, std::vector<int> labels);
/// 0.5 * mean over rows with mask!=0 of ||pred_row - target_row||^2.
Var masked_sqnorm_mean(const Var& pred, Tensor target, std::vector<uint8_t> mask);

// ---------------------------------------------------------------------------
// Initialization (weights uniform in +/- sqrt(6/(fan_in+fan_out))).
// ---------------------------------------------------------------------------

Tensor xavier_uniform(const Shape& shape, Rng& rng);

}  // namespace sardet::nn
