// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/attention.hpp"

#include <cmath>
#include <vector>

#include "sardet/kernels.hpp"
#include "sardet/nn.hpp"

namespace kk = sardet::kernels;

namespace sardet::attn {

namespace {

void check_attention(const Tensor& Q, const Tensor& K, const Tensor& V, int64_t heads, const char* op) {
  if (Q.rank() != 2 || K.rank() != 2 || V.rank() != 2) {
    throw DimError(std::string(op) + ": expected rank-2 Q,K,V");
  }
  if (Q.dim(1) != K.dim(1)) {
    throw DimError(std::string(op) + ": Q cols " + std::to_string(Q.dim(1)) + " != K cols " +
                   std::to_string(K.dim(1)));
  }
  if (K.dim(0) != V.dim(0)) {
    throw DimError(std::string(op) + ": K rows " + std::to_string(K.dim(0)) + " != V rows " +
                   std::to_string(V.dim(0)));
  }
  if (heads < 1 || Q.dim(1) % heads != 0 || V.dim(1) % heads != 0) {
    throw DimError(std::string(op) + ": channel dims " + std::to_string(Q.dim(1)) + "/" + std::to_string(V.dim(1)) +
                   " not divisible by " + std::to_string(heads) + " heads");
  }
}

}  // namespace

AttentionParams AttentionParams::init(int64_t C, int64_t heads, int64_t agents, Rng& rng, ParamStore& store,
                                      const std::string& prefix) {
  AttentionParams p;
  p.W_q = store.add(prefix + ".W_q", nn::xavier_uniform({C, C}, rng));
  p.b_q = store.add(prefix + ".b_q", Tensor::zeros({C}));
  p.W_k = store.add(prefix + ".W_k", nn::xavier_uniform({C, C}, rng));
  p.b_k = store.add(prefix + ".b_k", Tensor::zeros({C}));
  p.W_v = store.add(prefix + ".W_v", nn::xavier_uniform({C, C}, rng));
  p.b_v = store.add(prefix + ".b_v", Tensor::zeros({C}));
  // Residual output projection starts at zero so a fresh block is identity.
  p.W_o = store.add(prefix + ".W_o", Tensor::zeros({C, C}));
  p.b_o = store.add(prefix + ".b_o", Tensor::zeros({C}));
  p.heads = heads;
  p.agents = agents;
  return p;
}

Tensor softmax_attention(const Tensor& Q, const Tensor& K, const Tensor& V, int64_t heads) {
  check_attention(Q, K, V, heads, "softmax_attention");
  const int64_t nq = Q.dim(0), nk = K.dim(0);
  const int64_t ck = Q.dim(1), cv = V.dim(1);
  const int64_t dk = ck / heads, dv = cv / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor out({nq, cv});
  std::vector<double> scores(static_cast<size_t>(nk));
  for (int64_t h = 0; h < heads; ++h) {
    const int64_t qoff = h * dk, voff = h * dv;
    for (int64_t i = 0; i < nq; ++i) {
      const double* qrow = Q.data() + i * ck + qoff;
      double mx = -1e308;
      for (int64_t j = 0; j < nk; ++j) {
        scores[static_cast<size_t>(j)] = scale * kk::dot(qrow, K.data() + j * ck + qoff, dk);
        mx = std::max(mx, scores[static_cast<size_t>(j)]);
      }
      double sum = 0.0;
      for (int64_t j = 0; j < nk; ++j) {
        scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - mx);
        sum += scores[static_cast<size_t>(j)];
      }
      const double inv = 1.0 / sum;
      double* orow = out.data() + i * cv + voff;
      for (int64_t j = 0; j < nk; ++j) {
        kk::axpy(scores[static_cast<size_t>(j)] * inv, V.data() + j * cv + voff, orow, dv);
      }
    }
  }
  return out;
}

Var softmax_attention(const Var& Q, const Var& K, const Var& V, int64_t heads) {
  check_attention(Q.val(), K.val(), V.val(), heads, "softmax_attention");
  const int64_t ck = Q.dim(1), cv = V.dim(1);
  const int64_t dk = ck / heads, dv = cv / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Var out;
  for (int64_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? Q : nn::slice_cols(Q, h * dk, dk);
    Var kh = heads == 1 ? K : nn::slice_cols(K, h * dk, dk);
    Var vh = heads == 1 ? V : nn::slice_cols(V, h * dv, dv);
    Var probs = nn::softmax_rows(nn::scale(nn::matmul_nt(qh, kh), scale));
    Var oh = nn::matmul(probs, vh);
    out = h == 0 ? oh : nn::concat_cols(out, oh);
  }
  return out;
}

Tensor agent_pool(const Tensor& Q, int64_t n) { return nn::segment_mean_rows(Q, n); }

Var agent_pool(const Var& Q, int64_t n) { return nn::segment_mean_rows(Q, n); }

Tensor agent_attention(const Tensor& Q, const Tensor& K, const Tensor& V, const Tensor& A, int64_t heads) {
  if (A.rank() != 2 || A.dim(1) != Q.dim(1)) {
    throw DimError("agent_attention: agent shape " + shape_str(A.shape()) + " incompatible with queries " +
                   shape_str(Q.shape()));
  }
  const Tensor va = softmax_attention(A, K, V, heads);
  return softmax_attention(Q, A, va, heads);
}

Var agent_attention(const Var& Q, const Var& K, const Var& V, const Var& A, int64_t heads) {
  if (A.rank() != 2 || A.dim(1) != Q.dim(1)) {
    throw DimError("agent_attention: agent shape " + shape_str(A.val().shape()) + " incompatible with queries " +
                   shape_str(Q.val().shape()));
  }
  Var va = softmax_attention(A, K, V, heads);
  return softmax_attention(Q, A, va, heads);
}

Var agent_attention_block(const Var& x, const AttentionParams& p) {
  Var q = nn::linear(x, p.W_q, p.b_q);
  Var k = nn::linear(x, p.W_k, p.b_k);
  Var v = nn::linear(x, p.W_v, p.b_v);
  Var a = agent_pool(q, std::min<int64_t>(p.agents, x.dim(0)));
  Var o = agent_attention(q, k, v, a, p.heads);
  return nn::linear(o, p.W_o, p.b_o);
}

}  // namespace sardet::attn
