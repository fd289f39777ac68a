// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <string>

#include "sardet/autograd.hpp"
#include "sardet/params.hpp"
#include "sardet/rng.hpp"

namespace sardet::attn {

using ag::Var;

struct AttentionParams {
  Var W_q, b_q, W_k, b_k, W_v, b_v, W_o, b_o;  // [C,C] / [C]
  int64_t heads = 4;
  int64_t agents = 16;

  int64_t channels() const { return W_q.dim(0); }

  static AttentionParams init(int64_t C, int64_t heads, int64_t agents, Rng& rng, ParamStore& store,
                              const std::string& prefix);
};

/// Scaled dot-product attention. Channels are split into `heads` groups,
/// each attended with scale 1/sqrt(per-head dim), outputs concatenated.
/// The tensor path streams one query row at a time (O(Nk) memory).
Tensor softmax_attention(const Tensor& Q, const Tensor& K, const Tensor& V, int64_t heads = 1);
Var softmax_attention(const Var& Q, const Var& K, const Var& V, int64_t heads = 1);

/// Agent tokens as contiguous-segment means of the query tokens.
Tensor agent_pool(const Tensor& Q, int64_t n);
Var agent_pool(const Var& Q, int64_t n);

/// Two-stage attention: V_A = Atten(A,K,V), out = Atten(Q,A,V_A).
Tensor agent_attention(const Tensor& Q, const Tensor& K, const Tensor& V, const Tensor& A, int64_t heads = 1);
Var agent_attention(const Var& Q, const Var& K, const Var& V, const Var& A, int64_t heads = 1);

/// Token-mixer block body: projections, pooled agents, agent attention,
/// output projection. Residual and pre-norm are applied by the caller.
Var agent_attention_block(const Var& x, const AttentionParams& p);

}  // namespace sardet::attn
