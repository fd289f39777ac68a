// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sardet/kernels.hpp"

namespace kk = sardet::kernels;

namespace sardet::nn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus1(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

int64_t rows_of(const Tensor& x) { return x.size() / x.shape().back(); }

void check_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
}

void check_matmul(const Tensor& A, const Tensor& B, int64_t ka, int64_t kb, const char* op) {
  if (ka != kb) {
    throw DimError(std::string(op) + ": inner dims differ, " + shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor-level forwards
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  kk::add(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  kk::sub(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  kk::mul(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor scale(const Tensor& x, double a) {
  Tensor out(x.shape());
  kk::scale(x.data(), a, out.data(), x.size());
  return out;
}

Tensor matmul(const Tensor& A, const Tensor& B) {
  check_rank2(A, "matmul");
  check_rank2(B, "matmul");
  check_matmul(A, B, A.dim(1), B.dim(0), "matmul");
  const int64_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor C({m, n});
  for (int64_t i = 0; i < m; ++i) {
    double* crow = C.data() + i * n;
    const double* arow = A.data() + i * k;
    for (int64_t p = 0; p < k; ++p) kk::axpy(arow[p], B.data() + p * n, crow, n);
  }
  return C;
}

Tensor matmul_nt(const Tensor& A, const Tensor& B) {
  check_rank2(A, "matmul_nt");
  check_rank2(B, "matmul_nt");
  check_matmul(A, B, A.dim(1), B.dim(1), "matmul_nt");
  const int64_t m = A.dim(0), k = A.dim(1), n = B.dim(0);
  Tensor C({m, n});
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = A.data() + i * k;
    double* crow = C.data() + i * n;
    for (int64_t j = 0; j < n; ++j) crow[j] = kk::dot(arow, B.data() + j * k, k);
  }
  return C;
}

Tensor matmul_tn(const Tensor& A, const Tensor& B) {
  check_rank2(A, "matmul_tn");
  check_rank2(B, "matmul_tn");
  check_matmul(A, B, A.dim(0), B.dim(0), "matmul_tn");
  const int64_t r = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor C({k, n});
  for (int64_t i = 0; i < r; ++i) {
    const double* arow = A.data() + i * k;
    const double* brow = B.data() + i * n;
    for (int64_t p = 0; p < k; ++p) kk::axpy(arow[p], brow, C.data() + p * n, n);
  }
  return C;
}

Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b) {
  check_rank2(W, "linear");
  const int64_t ci = W.dim(0), co = W.dim(1);
  if (x.rank() < 1 || x.shape().back() != ci) {
    throw DimError("linear: input shape " + shape_str(x.shape()) + " incompatible with weight " +
                   shape_str(W.shape()));
  }
  if (b.rank() != 1 || b.dim(0) != co) {
    throw DimError("linear: bias shape " + shape_str(b.shape()) + " incompatible with weight " +
                   shape_str(W.shape()));
  }
  const int64_t rows = rows_of(x);
  Shape out_shape = x.shape();
  out_shape.back() = co;
  Tensor y(out_shape);
  for (int64_t r = 0; r < rows; ++r) {
    double* yrow = y.data() + r * co;
    std::memcpy(yrow, b.data(), sizeof(double) * static_cast<size_t>(co));
    const double* xrow = x.data() + r * ci;
    for (int64_t i = 0; i < ci; ++i) kk::axpy(xrow[i], W.data() + i * co, yrow, co);
  }
  return y;
}

Tensor silu(const Tensor& x) {
  Tensor y(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) y[i] = x[i] * sigmoid(x[i]);
  return y;
}

Tensor softplus(const Tensor& x) {
  Tensor y(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) y[i] = softplus1(x[i]);
  return y;
}

Tensor exp(const Tensor& x) {
  Tensor y(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) y[i] = std::exp(x[i]);
  return y;
}

namespace {

// Shared layer_norm forward; optionally records x_hat and 1/std per row.
Tensor layer_norm_fwd(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps, Tensor* xhat_out,
                      std::vector<double>* inv_std_out) {
  if (eps <= 0.0) throw ConfigError("layer_norm: eps must be positive");
  const int64_t c = x.shape().back();
  if (gamma.size() != c || beta.size() != c) {
    throw DimError("layer_norm: gamma/beta size must match last dim " + std::to_string(c));
  }
  const int64_t rows = rows_of(x);
  Tensor y(x.shape());
  if (xhat_out) *xhat_out = Tensor::zeros(x.shape());
  if (inv_std_out) inv_std_out->resize(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * c;
    double* yr = y.data() + r * c;
    const double mean = kk::sum(xr, c) / static_cast<double>(c);
    double var = 0.0;
    for (int64_t j = 0; j < c; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < c; ++j) {
      const double xh = (xr[j] - mean) * inv;
      yr[j] = xh * gamma[j] + beta[j];
      if (xhat_out) (*xhat_out)[r * c + j] = xh;
    }
    if (inv_std_out) (*inv_std_out)[static_cast<size_t>(r)] = inv;
  }
  return y;
}

}  // namespace

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  return layer_norm_fwd(x, gamma, beta, eps, nullptr, nullptr);
}

Tensor softmax_rows(const Tensor& x) {
  const int64_t k = x.shape().back();
  const int64_t rows = rows_of(x);
  Tensor y(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * k;
    double* yr = y.data() + r * k;
    double m = xr[0];
    for (int64_t j = 1; j < k; ++j) m = std::max(m, xr[j]);
    double s = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      yr[j] = std::exp(xr[j] - m);
      s += yr[j];
    }
    const double inv = 1.0 / s;
    for (int64_t j = 0; j < k; ++j) yr[j] *= inv;
  }
  return y;
}

namespace {

struct Conv2dDims {
  int64_t ci, h, w, co, kh, kw, ho, wo;
};

Conv2dDims conv2d_dims(const Tensor& x, const Tensor& k, const Tensor& b, int stride, int pad) {
  if (x.rank() != 3 || k.rank() != 4) {
    throw DimError("conv2d: expected x[C,H,W], k[Co,Ci,kh,kw]; got " + shape_str(x.shape()) + " and " +
                   shape_str(k.shape()));
  }
  if (stride < 1 || pad < 0) throw ConfigError("conv2d: stride must be >= 1 and pad >= 0");
  Conv2dDims d{};
  d.ci = x.dim(0);
  d.h = x.dim(1);
  d.w = x.dim(2);
  d.co = k.dim(0);
  d.kh = k.dim(2);
  d.kw = k.dim(3);
  if (k.dim(1) != d.ci) {
    throw DimError("conv2d: kernel in-channels " + std::to_string(k.dim(1)) + " != input channels " +
                   std::to_string(d.ci));
  }
  if (b.rank() != 1 || b.dim(0) != d.co) {
    throw DimError("conv2d: bias shape " + shape_str(b.shape()) + " must be [" + std::to_string(d.co) + "]");
  }
  const int64_t hn = d.h + 2 * pad - d.kh;
  const int64_t wn = d.w + 2 * pad - d.kw;
  if (hn < 0 || wn < 0 || hn % stride != 0 || wn % stride != 0) {
    throw DimError("conv2d: non-integral output size for input " + shape_str(x.shape()) + ", kernel " +
                   shape_str(k.shape()) + ", stride " + std::to_string(stride) + ", pad " + std::to_string(pad));
  }
  d.ho = hn / stride + 1;
  d.wo = wn / stride + 1;
  return d;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& b, int stride, int pad) {
  const Conv2dDims d = conv2d_dims(x, k, b, stride, pad);
  Tensor y({d.co, d.ho, d.wo});
  for (int64_t co = 0; co < d.co; ++co) {
    double* yc = y.data() + co * d.ho * d.wo;
    for (int64_t i = 0; i < d.ho * d.wo; ++i) yc[i] = b[co];
    for (int64_t ci = 0; ci < d.ci; ++ci) {
      const double* xc = x.data() + ci * d.h * d.w;
      for (int64_t ky = 0; ky < d.kh; ++ky) {
        for (int64_t kx = 0; kx < d.kw; ++kx) {
          const double wgt = k[((co * d.ci + ci) * d.kh + ky) * d.kw + kx];
          if (wgt == 0.0) continue;
          for (int64_t oh = 0; oh < d.ho; ++oh) {
            const int64_t ih = oh * stride + ky - pad;
            if (ih < 0 || ih >= d.h) continue;
            double* yrow = yc + oh * d.wo;
            const double* xrow = xc + ih * d.w;
            if (stride == 1) {
              const int64_t lo = std::max<int64_t>(0, pad - kx);
              const int64_t hi = std::min(d.wo, d.w + pad - kx);
              if (lo < hi) kk::axpy(wgt, xrow + lo + kx - pad, yrow + lo, hi - lo);
            } else {
              for (int64_t ow = 0; ow < d.wo; ++ow) {
                const int64_t iw = ow * stride + kx - pad;
                if (iw >= 0 && iw < d.w) yrow[ow] += wgt * xrow[iw];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor conv1d_depthwise(const Tensor& x, const Tensor& k, int pad) {
  check_rank2(x, "conv1d_depthwise");
  check_rank2(k, "conv1d_depthwise");
  const int64_t L = x.dim(0), c = x.dim(1), kw = k.dim(1);
  if (k.dim(0) != c) {
    throw DimError("conv1d_depthwise: kernel channels " + std::to_string(k.dim(0)) + " != input channels " +
                   std::to_string(c));
  }
  if (kw % 2 == 0) throw ConfigError("conv1d_depthwise: kernel width must be odd, got " + std::to_string(kw));
  if (pad != (static_cast<int>(kw) - 1) / 2) {
    throw ConfigError("conv1d_depthwise: pad must be (kw-1)/2 = " + std::to_string((kw - 1) / 2));
  }
  // Column-major copy of k so channel vectors are contiguous.
  std::vector<double> kt(static_cast<size_t>(kw * c));
  for (int64_t j = 0; j < kw; ++j)
    for (int64_t cc = 0; cc < c; ++cc) kt[static_cast<size_t>(j * c + cc)] = k[cc * kw + j];
  Tensor y({L, c});
  for (int64_t t = 0; t < L; ++t) {
    double* yr = y.data() + t * c;
    for (int64_t j = 0; j < kw; ++j) {
      const int64_t tt = t + j - pad;
      if (tt < 0 || tt >= L) continue;
      kk::fmadd(kt.data() + j * c, x.data() + tt * c, yr, c);
    }
  }
  return y;
}

Tensor upsample2x(const Tensor& x) {
  if (x.rank() != 3) throw DimError("upsample2x: expected [C,H,W], got " + shape_str(x.shape()));
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, 2 * h, 2 * w});
  for (int64_t cc = 0; cc < c; ++cc) {
    const double* xc = x.data() + cc * h * w;
    double* yc = y.data() + cc * 4 * h * w;
    for (int64_t i = 0; i < 2 * h; ++i) {
      const double* xrow = xc + (i / 2) * w;
      double* yrow = yc + i * 2 * w;
      for (int64_t j = 0; j < 2 * w; ++j) yrow[j] = xrow[j / 2];
    }
  }
  return y;
}

Tensor chw_to_tokens(const Tensor& x) {
  if (x.rank() != 3) throw DimError("chw_to_tokens: expected [C,H,W], got " + shape_str(x.shape()));
  const int64_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  Tensor y({hw, c});
  for (int64_t cc = 0; cc < c; ++cc) {
    const double* xc = x.data() + cc * hw;
    for (int64_t i = 0; i < hw; ++i) y[i * c + cc] = xc[i];
  }
  return y;
}

Tensor tokens_to_chw(const Tensor& x, int64_t H, int64_t W) {
  check_rank2(x, "tokens_to_chw");
  if (x.dim(0) != H * W) {
    throw DimError("tokens_to_chw: " + std::to_string(x.dim(0)) + " tokens cannot fill a " + std::to_string(H) +
                   "x" + std::to_string(W) + " grid");
  }
  const int64_t c = x.dim(1);
  Tensor y({c, H, W});
  for (int64_t i = 0; i < H * W; ++i) {
    const double* xr = x.data() + i * c;
    for (int64_t cc = 0; cc < c; ++cc) y[cc * H * W + i] = xr[cc];
  }
  return y;
}

Tensor permute_rows(const Tensor& x, const std::vector<int64_t>& src) {
  check_rank2(x, "permute_rows");
  if (static_cast<int64_t>(src.size()) != x.dim(0)) {
    throw DimError("permute_rows: index count " + std::to_string(src.size()) + " != rows " +
                   std::to_string(x.dim(0)));
  }
  const int64_t c = x.dim(1);
  Tensor y(x.shape());
  for (int64_t t = 0; t < x.dim(0); ++t) {
    std::memcpy(y.data() + t * c, x.data() + src[static_cast<size_t>(t)] * c, sizeof(double) * static_cast<size_t>(c));
  }
  return y;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check_rank2(a, "concat_cols");
  check_rank2(b, "concat_cols");
  if (a.dim(0) != b.dim(0)) {
    throw DimError("concat_cols: row counts differ, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const int64_t r = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  Tensor y({r, ca + cb});
  for (int64_t i = 0; i < r; ++i) {
    std::memcpy(y.data() + i * (ca + cb), a.data() + i * ca, sizeof(double) * static_cast<size_t>(ca));
    std::memcpy(y.data() + i * (ca + cb) + ca, b.data() + i * cb, sizeof(double) * static_cast<size_t>(cb));
  }
  return y;
}

Tensor slice_cols(const Tensor& x, int64_t off, int64_t len) {
  check_rank2(x, "slice_cols");
  if (off < 0 || len < 1 || off + len > x.dim(1)) {
    throw DimError("slice_cols: range [" + std::to_string(off) + "," + std::to_string(off + len) +
                   ") out of bounds for " + shape_str(x.shape()));
  }
  const int64_t r = x.dim(0), c = x.dim(1);
  Tensor y({r, len});
  for (int64_t i = 0; i < r; ++i) {
    std::memcpy(y.data() + i * len, x.data() + i * c + off, sizeof(double) * static_cast<size_t>(len));
  }
  return y;
}

std::vector<int64_t> segment_sizes(int64_t rows, int64_t n) {
  if (n < 1 || n > rows) {
    throw ConfigError("segment count " + std::to_string(n) + " must be in [1, " + std::to_string(rows) + "]");
  }
  std::vector<int64_t> sizes(static_cast<size_t>(n), rows / n);
  for (int64_t i = 0; i < rows % n; ++i) sizes[static_cast<size_t>(i)] += 1;
  return sizes;
}

Tensor segment_mean_rows(const Tensor& x, int64_t n) {
  check_rank2(x, "segment_mean_rows");
  const auto sizes = segment_sizes(x.dim(0), n);
  const int64_t c = x.dim(1);
  Tensor y({n, c});
  int64_t row = 0;
  for (int64_t s = 0; s < n; ++s) {
    double* yr = y.data() + s * c;
    for (int64_t i = 0; i < sizes[static_cast<size_t>(s)]; ++i, ++row) {
      kk::axpy(1.0, x.data() + row * c, yr, c);
    }
    kk::scale(yr, 1.0 / static_cast<double>(sizes[static_cast<size_t>(s)]), yr, c);
  }
  return y;
}

double sum_all(const Tensor& x) { return kk::sum(x.data(), x.size()); }

double mean_all(const Tensor& x) { return sum_all(x) / static_cast<double>(x.size()); }

double cross_entropy_mean(const Tensor& logits, const std::vector<int>& labels) {
  check_rank2(logits, "cross_entropy_mean");
  const int64_t nrows = logits.dim(0), k = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != nrows) {
    throw DimError("cross_entropy_mean: " + std::to_string(labels.size()) + " labels for " + std::to_string(nrows) +
                   " rows");
  }
  double total = 0.0;
  for (int64_t r = 0; r < nrows; ++r) {
    const double* lr = logits.data() + r * k;
    const int lab = labels[static_cast<size_t>(r)];
    if (lab < 0 || lab >= k) throw DimError("cross_entropy_mean: label out of range");
    double m = lr[0];
    for (int64_t j = 1; j < k; ++j) m = std::max(m, lr[j]);
    double s = 0.0;
    for (int64_t j = 0; j < k; ++j) s += std::exp(lr[j] - m);
    total += m + std::log(s) - lr[lab];
  }
  return total / static_cast<double>(nrows);
}

// ---------------------------------------------------------------------------
// Var ops
// ---------------------------------------------------------------------------

using ag::Node;
using ag::Var;

Var add(const Var& a, const Var& b) {
  Tensor out = add(a.val(), b.val());
  return ag::make_op(std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
    if (n.parents[1]->requires_grad) n.parents[1]->accum_grad(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  Tensor out = sub(a.val(), b.val());
  return ag::make_op(std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
    if (n.parents[1]->requires_grad) {
      Tensor& g = n.parents[1]->ensure_grad();
      kk::axpy(-1.0, n.grad.data(), g.data(), g.size());
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Tensor out = mul(a.val(), b.val());
  return ag::make_op(std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      Tensor& g = n.parents[0]->ensure_grad();
      kk::fmadd(n.grad.data(), n.parents[1]->value.data(), g.data(), g.size());
    }
    if (n.parents[1]->requires_grad) {
      Tensor& g = n.parents[1]->ensure_grad();
      kk::fmadd(n.grad.data(), n.parents[0]->value.data(), g.data(), g.size());
    }
  });
}

Var scale(const Var& x, double a) {
  Tensor out = scale(x.val(), a);
  return ag::make_op(std::move(out), {x}, [a](Node& n) {
    Tensor& g = n.parents[0]->ensure_grad();
    kk::axpy(a, n.grad.data(), g.data(), g.size());
  });
}

Var matmul(const Var& A, const Var& B) {
  Tensor out = matmul(A.val(), B.val());
  return ag::make_op(std::move(out), {A, B}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(matmul_nt(n.grad, n.parents[1]->value));
    if (n.parents[1]->requires_grad) n.parents[1]->accum_grad(matmul_tn(n.parents[0]->value, n.grad));
  });
}

Var matmul_nt(const Var& A, const Var& B) {
  Tensor out = matmul_nt(A.val(), B.val());
  return ag::make_op(std::move(out), {A, B}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(matmul(n.grad, n.parents[1]->value));
    if (n.parents[1]->requires_grad) n.parents[1]->accum_grad(matmul_tn(n.grad, n.parents[0]->value));
  });
}

Var linear(const Var& x, const Var& W, const Var& b) {
  Tensor out = linear(x.val(), W.val(), b.val());
  return ag::make_op(std::move(out), {x, W, b}, [](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& wv = n.parents[1]->value;
    const int64_t ci = wv.dim(0), co = wv.dim(1);
    const int64_t rows = xv.size() / ci;
    const Tensor g2 = n.grad.reshaped({rows, co});
    if (n.parents[0]->requires_grad) {
      n.parents[0]->accum_grad(matmul_nt(g2, wv).reshaped(xv.shape()));
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->accum_grad(matmul_tn(xv.reshaped({rows, ci}), g2));
    }
    if (n.parents[2]->requires_grad) {
      Tensor& gb = n.parents[2]->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) kk::axpy(1.0, g2.data() + r * co, gb.data(), co);
    }
  });
}

Var silu(const Var& x) {
  Tensor out = silu(x.val());
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    Tensor& g = n.parents[0]->ensure_grad();
    for (int64_t i = 0; i < xv.size(); ++i) {
      const double s = sigmoid(xv[i]);
      g[i] += n.grad[i] * s * (1.0 + xv[i] * (1.0 - s));
    }
  });
}

Var softplus(const Var& x) {
  Tensor out = softplus(x.val());
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    Tensor& g = n.parents[0]->ensure_grad();
    for (int64_t i = 0; i < xv.size(); ++i) g[i] += n.grad[i] * sigmoid(xv[i]);
  });
}

Var exp(const Var& x) {
  Tensor out = exp(x.val());
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    Tensor& g = n.parents[0]->ensure_grad();
    kk::fmadd(n.grad.data(), n.value.data(), g.data(), g.size());
  });
}

Var neg_exp(const Var& x) {
  Tensor out = scale(exp(x.val()), -1.0);
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    Tensor& g = n.parents[0]->ensure_grad();
    kk::fmadd(n.grad.data(), n.value.data(), g.data(), g.size());
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tensor xhat;
  std::vector<double> inv_std;
  const bool record = ag::grad_enabled() && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  Tensor out = layer_norm_fwd(x.val(), gamma.val(), beta.val(), eps, record ? &xhat : nullptr,
                              record ? &inv_std : nullptr);
  return ag::make_op(std::move(out), {x, gamma, beta},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& n) {
                       const int64_t c = n.value.shape().back();
                       const int64_t rows = n.value.size() / c;
                       const Tensor& gv = n.parents[1]->value;
                       if (n.parents[1]->requires_grad) {
                         Tensor& gg = n.parents[1]->ensure_grad();
                         for (int64_t r = 0; r < rows; ++r) {
                           kk::fmadd(n.grad.data() + r * c, xhat.data() + r * c, gg.data(), c);
                         }
                       }
                       if (n.parents[2]->requires_grad) {
                         Tensor& gb = n.parents[2]->ensure_grad();
                         for (int64_t r = 0; r < rows; ++r) kk::axpy(1.0, n.grad.data() + r * c, gb.data(), c);
                       }
                       if (n.parents[0]->requires_grad) {
                         Tensor& gx = n.parents[0]->ensure_grad();
                         std::vector<double> dxh(static_cast<size_t>(c));
                         for (int64_t r = 0; r < rows; ++r) {
                           const double* gr = n.grad.data() + r * c;
                           const double* xh = xhat.data() + r * c;
                           double m1 = 0.0, m2 = 0.0;
                           for (int64_t j = 0; j < c; ++j) {
                             dxh[static_cast<size_t>(j)] = gr[j] * gv[j];
                             m1 += dxh[static_cast<size_t>(j)];
                             m2 += dxh[static_cast<size_t>(j)] * xh[j];
                           }
                           m1 /= static_cast<double>(c);
                           m2 /= static_cast<double>(c);
                           const double inv = inv_std[static_cast<size_t>(r)];
                           double* gxr = gx.data() + r * c;
                           for (int64_t j = 0; j < c; ++j) {
                             gxr[j] += inv * (dxh[static_cast<size_t>(j)] - m1 - xh[j] * m2);
                           }
                         }
                       }
                     });
}

Var softmax_rows(const Var& x) {
  Tensor out = softmax_rows(x.val());
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    const int64_t k = n.value.shape().back();
    const int64_t rows = n.value.size() / k;
    Tensor& gx = n.parents[0]->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * k;
      const double* g = n.grad.data() + r * k;
      const double dotgy = kk::dot(g, y, k);
      double* gxr = gx.data() + r * k;
      for (int64_t j = 0; j < k; ++j) gxr[j] += y[j] * (g[j] - dotgy);
    }
  });
}

Var conv2d(const Var& x, const Var& k, const Var& b, int stride, int pad) {
  Tensor out = conv2d(x.val(), k.val(), b.val(), stride, pad);
  return ag::make_op(std::move(out), {x, k, b}, [stride, pad](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& kv = n.parents[1]->value;
    const Conv2dDims d = conv2d_dims(xv, kv, n.parents[2]->value, stride, pad);
    const bool need_dx = n.parents[0]->requires_grad;
    const bool need_dk = n.parents[1]->requires_grad;
    if (n.parents[2]->requires_grad) {
      Tensor& db = n.parents[2]->ensure_grad();
      for (int64_t co = 0; co < d.co; ++co) db[co] += kk::sum(n.grad.data() + co * d.ho * d.wo, d.ho * d.wo);
    }
    if (!need_dx && !need_dk) return;
    Tensor* dx = need_dx ? &n.parents[0]->ensure_grad() : nullptr;
    Tensor* dk = need_dk ? &n.parents[1]->ensure_grad() : nullptr;
    for (int64_t co = 0; co < d.co; ++co) {
      const double* gc = n.grad.data() + co * d.ho * d.wo;
      for (int64_t ci = 0; ci < d.ci; ++ci) {
        const double* xc = xv.data() + ci * d.h * d.w;
        double* dxc = need_dx ? dx->data() + ci * d.h * d.w : nullptr;
        for (int64_t ky = 0; ky < d.kh; ++ky) {
          for (int64_t kx = 0; kx < d.kw; ++kx) {
            const int64_t kidx = ((co * d.ci + ci) * d.kh + ky) * d.kw + kx;
            const double wgt = kv[kidx];
            double wacc = 0.0;
            for (int64_t oh = 0; oh < d.ho; ++oh) {
              const int64_t ih = oh * stride + ky - pad;
              if (ih < 0 || ih >= d.h) continue;
              const double* grow = gc + oh * d.wo;
              if (stride == 1) {
                const int64_t lo = std::max<int64_t>(0, pad - kx);
                const int64_t hi = std::min(d.wo, d.w + pad - kx);
                if (lo >= hi) continue;
                if (need_dk) wacc += kk::dot(grow + lo, xc + ih * d.w + lo + kx - pad, hi - lo);
                if (need_dx) kk::axpy(wgt, grow + lo, dxc + ih * d.w + lo + kx - pad, hi - lo);
              } else {
                for (int64_t ow = 0; ow < d.wo; ++ow) {
                  const int64_t iw = ow * stride + kx - pad;
                  if (iw < 0 || iw >= d.w) continue;
                  if (need_dk) wacc += grow[ow] * xc[ih * d.w + iw];
                  if (need_dx) dxc[ih * d.w + iw] += wgt * grow[ow];
                }
              }
            }
            if (need_dk) (*dk)[kidx] += wacc;
          }
        }
      }
    }
  });
}

Var conv1d_depthwise(const Var& x, const Var& k, int pad) {
  Tensor out = conv1d_depthwise(x.val(), k.val(), pad);
  return ag::make_op(std::move(out), {x, k}, [pad](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& kv = n.parents[1]->value;
    const int64_t L = xv.dim(0), c = xv.dim(1), kw = kv.dim(1);
    if (n.parents[0]->requires_grad) {
      Tensor& dx = n.parents[0]->ensure_grad();
      std::vector<double> kt(static_cast<size_t>(c));
      for (int64_t j = 0; j < kw; ++j) {
        for (int64_t cc = 0; cc < c; ++cc) kt[static_cast<size_t>(cc)] = kv[cc * kw + j];
        for (int64_t t = 0; t < L; ++t) {
          const int64_t tt = t + j - pad;
          if (tt < 0 || tt >= L) continue;
          kk::fmadd(kt.data(), n.grad.data() + t * c, dx.data() + tt * c, c);
        }
      }
    }
    if (n.parents[1]->requires_grad) {
      Tensor& dk = n.parents[1]->ensure_grad();
      std::vector<double> acc(static_cast<size_t>(c));
      for (int64_t j = 0; j < kw; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int64_t t = 0; t < L; ++t) {
          const int64_t tt = t + j - pad;
          if (tt < 0 || tt >= L) continue;
          kk::fmadd(xv.data() + tt * c, n.grad.data() + t * c, acc.data(), c);
        }
        for (int64_t cc = 0; cc < c; ++cc) dk[cc * kw + j] += acc[static_cast<size_t>(cc)];
      }
    }
  });
}

Var upsample2x(const Var& x) {
  Tensor out = upsample2x(x.val());
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const int64_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    Tensor& dx = n.parents[0]->ensure_grad();
    for (int64_t cc = 0; cc < c; ++cc) {
      const double* gc = n.grad.data() + cc * 4 * h * w;
      double* dxc = dx.data() + cc * h * w;
      for (int64_t i = 0; i < 2 * h; ++i) {
        const double* grow = gc + i * 2 * w;
        double* dxrow = dxc + (i / 2) * w;
        for (int64_t j = 0; j < 2 * w; ++j) dxrow[j / 2] += grow[j];
      }
    }
  });
}

Var chw_to_tokens(const Var& x) {
  Tensor out = chw_to_tokens(x.val());
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const int64_t c = xv.dim(0), hw = xv.dim(1) * xv.dim(2);
    Tensor& dx = n.parents[0]->ensure_grad();
    for (int64_t cc = 0; cc < c; ++cc) {
      double* dxc = dx.data() + cc * hw;
      for (int64_t i = 0; i < hw; ++i) dxc[i] += n.grad[i * c + cc];
    }
  });
}

Var tokens_to_chw(const Var& x, int64_t H, int64_t W) {
  Tensor out = tokens_to_chw(x.val(), H, W);
  return ag::make_op(std::move(out), {x}, [H, W](Node& n) {
    const int64_t c = n.parents[0]->value.dim(1);
    Tensor& dx = n.parents[0]->ensure_grad();
    for (int64_t i = 0; i < H * W; ++i) {
      double* dxr = dx.data() + i * c;
      for (int64_t cc = 0; cc < c; ++cc) dxr[cc] += n.grad[cc * H * W + i];
    }
  });
}

Var permute_rows(const Var& x, std::vector<int64_t> src) {
  Tensor out = permute_rows(x.val(), src);
  return ag::make_op(std::move(out), {x}, [src = std::move(src)](Node& n) {
    const int64_t c = n.value.dim(1);
    Tensor& dx = n.parents[0]->ensure_grad();
    for (int64_t t = 0; t < n.value.dim(0); ++t) {
      kk::axpy(1.0, n.grad.data() + t * c, dx.data() + src[static_cast<size_t>(t)] * c, c);
    }
  });
}

Var concat_cols(const Var& a, const Var& b) {
  Tensor out = concat_cols(a.val(), b.val());
  return ag::make_op(std::move(out), {a, b}, [](Node& n) {
    const int64_t r = n.value.dim(0);
    const int64_t ca = n.parents[0]->value.dim(1);
    const int64_t cb = n.parents[1]->value.dim(1);
    if (n.parents[0]->requires_grad) {
      Tensor& ga = n.parents[0]->ensure_grad();
      for (int64_t i = 0; i < r; ++i) kk::axpy(1.0, n.grad.data() + i * (ca + cb), ga.data() + i * ca, ca);
    }
    if (n.parents[1]->requires_grad) {
      Tensor& gb = n.parents[1]->ensure_grad();
      for (int64_t i = 0; i < r; ++i) kk::axpy(1.0, n.grad.data() + i * (ca + cb) + ca, gb.data() + i * cb, cb);
    }
  });
}

Var slice_cols(const Var& x, int64_t off, int64_t len) {
  Tensor out = slice_cols(x.val(), off, len);
  return ag::make_op(std::move(out), {x}, [off, len](Node& n) {
    const int64_t c = n.parents[0]->value.dim(1);
    Tensor& dx = n.parents[0]->ensure_grad();
    for (int64_t i = 0; i < n.value.dim(0); ++i) {
      kk::axpy(1.0, n.grad.data() + i * len, dx.data() + i * c + off, len);
    }
  });
}

Var segment_mean_rows(const Var& x, int64_t n_segments) {
  Tensor out = segment_mean_rows(x.val(), n_segments);
  return ag::make_op(std::move(out), {x}, [n_segments](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const auto sizes = segment_sizes(xv.dim(0), n_segments);
    const int64_t c = xv.dim(1);
    Tensor& dx = n.parents[0]->ensure_grad();
    int64_t row = 0;
    for (int64_t s = 0; s < n_segments; ++s) {
      const double inv = 1.0 / static_cast<double>(sizes[static_cast<size_t>(s)]);
      for (int64_t i = 0; i < sizes[static_cast<size_t>(s)]; ++i, ++row) {
        kk::axpy(inv, n.grad.data() + s * c, dx.data() + row * c, c);
      }
    }
  });
}

Var reshape(const Var& x, Shape s) {
  Tensor out = x.val().reshaped(std::move(s));
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    Tensor& dx = n.parents[0]->ensure_grad();
    kk::axpy(1.0, n.grad.data(), dx.data(), dx.size());
  });
}

Var sum_all_v(const Var& x) {
  Tensor out = Tensor::scalar(sum_all(x.val()));
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    Tensor& dx = n.parents[0]->ensure_grad();
    const double g = n.grad[0];
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] += g;
  });
}

Var mean_all_v(const Var& x) {
  Tensor out = Tensor::scalar(mean_all(x.val()));
  return ag::make_op(std::move(out), {x}, [](Node& n) {
    Tensor& dx = n.parents[0]->ensure_grad();
    const double g = n.grad[0] / static_cast<double>(dx.size());
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] += g;
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw DimError("stack_rows: no rows");
  const int64_t d = rows[0].val().size();
  Tensor out({static_cast<int64_t>(rows.size()), d});
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].val().size() != d) throw DimError("stack_rows: row sizes differ");
    std::memcpy(out.data() + static_cast<int64_t>(i) * d, rows[i].val().data(),
                sizeof(double) * static_cast<size_t>(d));
  }
  return ag::make_op(std::move(out), rows, [d](Node& n) {
    for (size_t i = 0; i < n.parents.size(); ++i) {
      if (!n.parents[i]->requires_grad) continue;
      Tensor& g = n.parents[i]->ensure_grad();
      kk::axpy(1.0, n.grad.data() + static_cast<int64_t>(i) * d, g.data(), d);
    }
  });
}

Var cross_entropy_mean(const Var& logits, std::vector<int> labels) {
  Tensor out = Tensor::scalar(cross_entropy_mean(logits.val(), labels));
  return ag::make_op(std::move(out), {logits}, [labels = std::move(labels)](Node& n) {
    const Tensor& lv = n.parents[0]->value;
    const int64_t rows = lv.dim(0), k = lv.dim(1);
    Tensor soft = softmax_rows(lv);
    Tensor& dl = n.parents[0]->ensure_grad();
    const double g = n.grad[0] / static_cast<double>(rows);
    for (int64_t r = 0; r < rows; ++r) {
      double* dr = dl.data() + r * k;
      const double* sr = soft.data() + r * k;
      for (int64_t j = 0; j < k; ++j) dr[j] += g * sr[j];
      dr[labels[static_cast<size_t>(r)]] -= g;
    }
  });
}

Var masked_sqnorm_mean(const Var& pred, Tensor target, std::vector<uint8_t> mask) {
  require_same_shape(pred.val(), target, "masked_sqnorm_mean");
  const int64_t rows = pred.val().dim(0), c = pred.val().dim(1);
  if (static_cast<int64_t>(mask.size()) != rows) throw DimError("masked_sqnorm_mean: mask size mismatch");
  int64_t count = 0;
  for (uint8_t m : mask) count += (m != 0);
  double loss = 0.0;
  if (count > 0) {
    for (int64_t r = 0; r < rows; ++r) {
      if (!mask[static_cast<size_t>(r)]) continue;
      for (int64_t j = 0; j < c; ++j) {
        const double dv = pred.val()[r * c + j] - target[r * c + j];
        loss += dv * dv;
      }
    }
    loss *= 0.5 / static_cast<double>(count);
  }
  return ag::make_op(Tensor::scalar(loss), {pred},
                     [target = std::move(target), mask = std::move(mask), count](Node& n) {
                       if (count == 0) return;
                       const Tensor& pv = n.parents[0]->value;
                       const int64_t rows = pv.dim(0), c = pv.dim(1);
                       Tensor& dp = n.parents[0]->ensure_grad();
                       const double g = n.grad[0] / static_cast<double>(count);
                       for (int64_t r = 0; r < rows; ++r) {
                         if (!mask[static_cast<size_t>(r)]) continue;
                         for (int64_t j = 0; j < c; ++j) {
                           dp[r * c + j] += g * (pv[r * c + j] - target[r * c + j]);
                         }
                       }
                     });
}

Tensor xavier_uniform(const Shape& shape, Rng& rng) {
  double fan_in = 1.0, fan_out = 1.0;
  if (shape.size() == 2) {
    fan_in = static_cast<double>(shape[0]);
    fan_out = static_cast<double>(shape[1]);
  } else if (shape.size() == 4) {
    fan_in = static_cast<double>(shape[1] * shape[2] * shape[3]);
    fan_out = static_cast<double>(shape[0] * shape[2] * shape[3]);
  } else {
    fan_in = fan_out = static_cast<double>(numel(shape));
  }
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace sardet::nn
