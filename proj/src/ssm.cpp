// Copyright (C) 2026 sardet contributors
// SPDX-License-Identifier: Apache-2.0
//
#include "sardet/ssm.hpp"

#include <cmath>
#include <cstring>

#include "sardet/kernels.hpp"
#include "sardet/nn.hpp"

namespace kk = sardet::kernels;

namespace sardet::ssm {

std::vector<int64_t> direction_index_map(ScanDirection d, int64_t H, int64_t W) {
  const int64_t n = H * W;
  std::vector<int64_t> map(static_cast<size_t>(n));
  switch (d) {
    case ScanDirection::LeftToRight:
      for (int64_t t = 0; t < n; ++t) map[static_cast<size_t>(t)] = t;
      break;
    case ScanDirection::TopDown:
      for (int64_t t = 0; t < n; ++t) map[static_cast<size_t>(t)] = (t % H) * W + t / H;
      break;
    case ScanDirection::BottomUp:
      for (int64_t t = 0; t < n; ++t) {
        const int64_t r = n - 1 - t;
        map[static_cast<size_t>(t)] = (r % H) * W + r / H;
      }
      break;
    case ScanDirection::RightToLeft:
      for (int64_t t = 0; t < n; ++t) map[static_cast<size_t>(t)] = n - 1 - t;
      break;
  }
  return map;
}

std::vector<int64_t> inverse_index_map(const std::vector<int64_t>& map) {
  std::vector<int64_t> inv(map.size());
  for (size_t t = 0; t < map.size(); ++t) inv[static_cast<size_t>(map[t])] = static_cast<int64_t>(t);
  return inv;
}

SsmParams SsmParams::init(int64_t C, int64_t S, Rng& rng) {
  SsmParams p;
  Tensor a_log({C, S});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t s = 0; s < S; ++s) a_log[c * S + s] = std::log(static_cast<double>(s + 1));
  p.A_log = Var::param(std::move(a_log), "A_log");
  p.D = Var::param(Tensor::full({C}, 1.0), "D");
  p.W_delta = Var::param(nn::xavier_uniform({C, C}, rng), "W_delta");
  p.b_delta = Var::param(Tensor::zeros({C}), "b_delta");
  p.W_B = Var::param(nn::xavier_uniform({C, S}, rng), "W_B");
  p.W_C = Var::param(nn::xavier_uniform({C, S}, rng), "W_C");
  return p;
}

SsmParams SsmParams::init(int64_t C, int64_t S, Rng& rng, ParamStore& store, const std::string& prefix) {
  SsmParams p;
  Tensor a_log({C, S});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t s = 0; s < S; ++s) a_log[c * S + s] = std::log(static_cast<double>(s + 1));
  p.A_log = store.add(prefix + ".A_log", std::move(a_log));
  p.D = store.add(prefix + ".D", Tensor::full({C}, 1.0));
  p.W_delta = store.add(prefix + ".W_delta", nn::xavier_uniform({C, C}, rng));
  p.b_delta = store.add(prefix + ".b_delta", Tensor::zeros({C}));
  p.W_B = store.add(prefix + ".W_B", nn::xavier_uniform({C, S}, rng));
  p.W_C = store.add(prefix + ".W_C", nn::xavier_uniform({C, S}, rng));
  return p;
}

SelectiveOut selective_params(const Tensor& u, const SsmParams& p) {
  SelectiveOut out;
  out.delta = nn::softplus(nn::linear(u, p.W_delta.val(), p.b_delta.val()));
  out.B = nn::matmul(u, p.W_B.val());
  out.Ct = nn::matmul(u, p.W_C.val());
  return out;
}

SelectiveOutV selective_params(const Var& u, const SsmParams& p) {
  SelectiveOutV out;
  out.delta = nn::softplus(nn::linear(u, p.W_delta, p.b_delta));
  out.B = nn::matmul(u, p.W_B);
  out.Ct = nn::matmul(u, p.W_C);
  return out;
}

namespace {

void check_scan_inputs(const Tensor& u, const SsmParams& p) {
  if (u.rank() != 2) throw DimError("s6_scan: expected u[L,C], got " + shape_str(u.shape()));
  if (u.dim(1) != p.channels()) {
    throw DimError("s6_scan: input channels " + std::to_string(u.dim(1)) + " != parameter channels " +
                   std::to_string(p.channels()));
  }
}

// Sequential recurrence on precomputed selective parameters. When h_states is
// non-null it receives every hidden state, laid out [C, L, S].
Tensor scan_core_seq(const Tensor& u, const Tensor& delta, const Tensor& B, const Tensor& Ct, const Tensor& A,
                     const Tensor& D, Tensor* h_states) {
  const int64_t L = u.dim(0), C = u.dim(1), S = A.dim(1);
  Tensor y({L, C});
  std::vector<double> abar(static_cast<size_t>(S));
  std::vector<double> bu(static_cast<size_t>(S));
  std::vector<double> h(static_cast<size_t>(S));
  for (int64_t c = 0; c < C; ++c) {
    std::fill(h.begin(), h.end(), 0.0);
    const double* Ac = A.data() + c * S;
    const double Dc = D[c];
    for (int64_t t = 0; t < L; ++t) {
      const double dt = delta[t * C + c];
      const double ut = u[t * C + c];
      for (int64_t s = 0; s < S; ++s) {
        abar[static_cast<size_t>(s)] = std::exp(dt * Ac[s]);
        bu[static_cast<size_t>(s)] = dt * B[t * S + s] * ut;
      }
      kk::scan_step(abar.data(), bu.data(), h.data(), S);
      if (h_states) {
        std::memcpy(h_states->data() + (c * L + t) * S, h.data(), sizeof(double) * static_cast<size_t>(S));
      }
      y[t * C + c] = kk::dot(Ct.data() + t * S, h.data(), S) + Dc * ut;
    }
  }
  return y;
}

// Chunked evaluation: local prefixes per chunk, then a running carry composed
// with the chunk aggregates. Chunk 0 skips the identity carry so a single
// chunk reproduces the sequential arithmetic exactly.
Tensor scan_core_chunked(const Tensor& u, const Tensor& delta, const Tensor& B, const Tensor& Ct, const Tensor& A,
                         const Tensor& D, int64_t chunk) {
  const int64_t L = u.dim(0), C = u.dim(1), S = A.dim(1);
  Tensor y({L, C});
  const int64_t clen = std::min(chunk, L);
  std::vector<double> a_loc(static_cast<size_t>(clen * S));
  std::vector<double> b_loc(static_cast<size_t>(clen * S));
  std::vector<double> carry_a(static_cast<size_t>(S));
  std::vector<double> carry_b(static_cast<size_t>(S));
  std::vector<double> abar(static_cast<size_t>(S));
  std::vector<double> bu(static_cast<size_t>(S));
  std::vector<double> h(static_cast<size_t>(S));
  for (int64_t c = 0; c < C; ++c) {
    const double* Ac = A.data() + c * S;
    const double Dc = D[c];
    bool have_carry = false;
    for (int64_t t0 = 0; t0 < L; t0 += chunk) {
      const int64_t t1 = std::min(t0 + chunk, L);
      // Local inclusive prefixes assuming zero state at the chunk start.
      for (int64_t t = t0; t < t1; ++t) {
        const double dt = delta[t * C + c];
        const double ut = u[t * C + c];
        for (int64_t s = 0; s < S; ++s) {
          abar[static_cast<size_t>(s)] = std::exp(dt * Ac[s]);
          bu[static_cast<size_t>(s)] = dt * B[t * S + s] * ut;
        }
        double* arow = a_loc.data() + (t - t0) * S;
        double* brow = b_loc.data() + (t - t0) * S;
        if (t == t0) {
          std::memcpy(arow, abar.data(), sizeof(double) * static_cast<size_t>(S));
          std::memcpy(brow, bu.data(), sizeof(double) * static_cast<size_t>(S));
        } else {
          std::memcpy(brow, brow - S, sizeof(double) * static_cast<size_t>(S));
          kk::scan_step(abar.data(), bu.data(), brow, S);
          kk::mul(arow - S, abar.data(), arow, S);
        }
      }
      // Apply the carry and emit outputs.
      for (int64_t t = t0; t < t1; ++t) {
        const double* arow = a_loc.data() + (t - t0) * S;
        const double* brow = b_loc.data() + (t - t0) * S;
        const double* hp = brow;
        if (have_carry) {
          std::memcpy(h.data(), carry_b.data(), sizeof(double) * static_cast<size_t>(S));
          kk::scan_step(arow, brow, h.data(), S);
          hp = h.data();
        }
        y[t * C + c] = kk::dot(Ct.data() + t * S, hp, S) + Dc * u[t * C + c];
      }
      // Fold this chunk's aggregate into the carry.
      const double* a_agg = a_loc.data() + (t1 - 1 - t0) * S;
      const double* b_agg = b_loc.data() + (t1 - 1 - t0) * S;
      if (!have_carry) {
        std::memcpy(carry_a.data(), a_agg, sizeof(double) * static_cast<size_t>(S));
        std::memcpy(carry_b.data(), b_agg, sizeof(double) * static_cast<size_t>(S));
        have_carry = true;
      } else {
        kk::scan_combine(a_agg, b_agg, carry_a.data(), carry_b.data(), S);
      }
    }
  }
  return y;
}

}  // namespace

Tensor s6_scan_seq(const Tensor& u, const SsmParams& p) {
  check_scan_inputs(u, p);
  const SelectiveOut sp = selective_params(u, p);
  const Tensor A = nn::scale(nn::exp(p.A_log.val()), -1.0);
  return scan_core_seq(u, sp.delta, sp.B, sp.Ct, A, p.D.val(), nullptr);
}

Tensor s6_scan_parallel(const Tensor& u, const SsmParams& p, int64_t chunk) {
  check_scan_inputs(u, p);
  if (chunk < 1) throw ConfigError("s6_scan_parallel: chunk must be >= 1");
  const SelectiveOut sp = selective_params(u, p);
  const Tensor A = nn::scale(nn::exp(p.A_log.val()), -1.0);
  return scan_core_chunked(u, sp.delta, sp.B, sp.Ct, A, p.D.val(), chunk);
}

namespace {

// Fused autograd node over (u, delta, B, Ct, A, D).
Var s6_scan_op(const Var& u, const Var& delta, const Var& B, const Var& Ct, const Var& A, const Var& D,
               int64_t chunk) {
  const int64_t L = u.dim(0), C = u.dim(1), S = A.val().dim(1);
  const bool recording = ag::grad_enabled() && (u.requires_grad() || delta.requires_grad() || B.requires_grad() ||
                                                Ct.requires_grad() || A.requires_grad() || D.requires_grad());
  if (!recording && chunk > 0) {
    return Var::leaf(scan_core_chunked(u.val(), delta.val(), B.val(), Ct.val(), A.val(), D.val(), chunk));
  }
  Tensor h_states({C, L, S});
  Tensor out = scan_core_seq(u.val(), delta.val(), B.val(), Ct.val(), A.val(), D.val(), &h_states);
  return ag::make_op(std::move(out), {u, delta, B, Ct, A, D}, [h_states = std::move(h_states)](ag::Node& n) {
    const Tensor& uv = n.parents[0]->value;
    const Tensor& dv = n.parents[1]->value;
    const Tensor& Bv = n.parents[2]->value;
    const Tensor& Cv = n.parents[3]->value;
    const Tensor& Av = n.parents[4]->value;
    const Tensor& Dv = n.parents[5]->value;
    const int64_t L = uv.dim(0), C = uv.dim(1), S = Av.dim(1);
    Tensor* du = n.parents[0]->requires_grad ? &n.parents[0]->ensure_grad() : nullptr;
    Tensor* ddelta = n.parents[1]->requires_grad ? &n.parents[1]->ensure_grad() : nullptr;
    Tensor* dB = n.parents[2]->requires_grad ? &n.parents[2]->ensure_grad() : nullptr;
    Tensor* dCt = n.parents[3]->requires_grad ? &n.parents[3]->ensure_grad() : nullptr;
    Tensor* dA = n.parents[4]->requires_grad ? &n.parents[4]->ensure_grad() : nullptr;
    Tensor* dD = n.parents[5]->requires_grad ? &n.parents[5]->ensure_grad() : nullptr;
    std::vector<double> dh(static_cast<size_t>(S));
    std::vector<double> dh_next(static_cast<size_t>(S));
    std::vector<double> abar(static_cast<size_t>(S));
    for (int64_t c = 0; c < C; ++c) {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      const double* Ac = Av.data() + c * S;
      for (int64_t t = L - 1; t >= 0; --t) {
        const double g = n.grad[t * C + c];
        const double dt = dv[t * C + c];
        const double ut = uv[t * C + c];
        const double* ht = h_states.data() + (c * L + t) * S;
        const double* hprev = t > 0 ? h_states.data() + (c * L + t - 1) * S : nullptr;
        for (int64_t s = 0; s < S; ++s) abar[static_cast<size_t>(s)] = std::exp(dt * Ac[s]);
        for (int64_t s = 0; s < S; ++s) dh[static_cast<size_t>(s)] = g * Cv[t * S + s] + dh_next[static_cast<size_t>(s)];
        if (dCt) {
          for (int64_t s = 0; s < S; ++s) (*dCt)[t * S + s] += g * ht[s];
        }
        if (dD) (*dD)[c] += g * ut;
        double du_acc = g * Dv[c];
        double ddt = 0.0;
        for (int64_t s = 0; s < S; ++s) {
          const double dhs = dh[static_cast<size_t>(s)];
          const double da = hprev ? dhs * hprev[s] : 0.0;
          ddt += da * abar[static_cast<size_t>(s)] * Ac[s];
          if (dA) (*dA)[c * S + s] += da * abar[static_cast<size_t>(s)] * dt;
          const double Bts = Bv[t * S + s];
          ddt += dhs * Bts * ut;
          if (dB) (*dB)[t * S + s] += dhs * dt * ut;
          du_acc += dhs * dt * Bts;
        }
        if (ddelta) (*ddelta)[t * C + c] += ddt;
        if (du) (*du)[t * C + c] += du_acc;
        for (int64_t s = 0; s < S; ++s) dh_next[static_cast<size_t>(s)] = abar[static_cast<size_t>(s)] * dh[static_cast<size_t>(s)];
      }
    }
  });
}

}  // namespace

Var s6_scan(const Var& u, const SsmParams& p, int64_t chunk) {
  check_scan_inputs(u.val(), p);
  SelectiveOutV sp = selective_params(u, p);
  Var A = nn::neg_exp(p.A_log);
  return s6_scan_op(u, sp.delta, sp.B, sp.Ct, A, p.D, chunk);
}

std::array<Tensor, 4> scan_expand4(const Tensor& grid) {
  if (grid.rank() != 3) throw DimError("scan_expand4: expected [C,H,W], got " + shape_str(grid.shape()));
  const int64_t H = grid.dim(1), W = grid.dim(2);
  const Tensor tokens = nn::chw_to_tokens(grid);
  std::array<Tensor, 4> out;
  for (size_t d = 0; d < 4; ++d) {
    out[d] = nn::permute_rows(tokens, direction_index_map(kDirections[d], H, W));
  }
  return out;
}

Tensor scan_merge4(const Tensor& y_lr, const Tensor& y_td, const Tensor& y_bu, const Tensor& y_rl, int64_t H,
                   int64_t W) {
  const std::array<const Tensor*, 4> ys = {&y_lr, &y_td, &y_bu, &y_rl};
  for (const Tensor* y : ys) {
    if (y->rank() != 2 || y->dim(0) != H * W) {
      throw DimError("scan_merge4: sequence shape " + shape_str(y->shape()) + " does not match grid " +
                     std::to_string(H) + "x" + std::to_string(W));
    }
    if (y->dim(1) != y_lr.dim(1)) throw DimError("scan_merge4: sequences disagree on channel count");
  }
  Tensor tokens({H * W, y_lr.dim(1)});
  for (size_t d = 0; d < 4; ++d) {
    const auto inv = inverse_index_map(direction_index_map(kDirections[d], H, W));
    const Tensor placed = nn::permute_rows(*ys[d], inv);
    kk::axpy(1.0, placed.data(), tokens.data(), tokens.size());
  }
  return nn::tokens_to_chw(tokens, H, W);
}

Var sar_scan(const Var& tokens, int64_t H, int64_t W, const std::array<SsmParams, 4>& dirs, int64_t chunk) {
  if (tokens.val().dim(0) != H * W) {
    throw DimError("sar_scan: token count " + std::to_string(tokens.val().dim(0)) + " != grid " +
                   std::to_string(H) + "x" + std::to_string(W));
  }
  Var acc;
  for (size_t d = 0; d < 4; ++d) {
    const auto map = direction_index_map(kDirections[d], H, W);
    Var seq = nn::permute_rows(tokens, map);
    Var y = s6_scan(seq, dirs[d], chunk);
    Var placed = nn::permute_rows(y, inverse_index_map(map));
    acc = d == 0 ? placed : nn::add(acc, placed);
  }
  return acc;
}

Tensor sar_scan(const Tensor& tokens, int64_t H, int64_t W, const std::array<SsmParams, 4>& dirs, int64_t chunk) {
  ag::NoGradGuard ng;
  return sar_scan(Var::leaf(tokens), H, W, dirs, chunk).val();
}

ScanElem combine(const ScanElem& e1, const ScanElem& e2) {
  ScanElem out;
  const size_t n = e1.a.size();
  out.a.resize(n);
  out.b.resize(n);
  std::vector<double> a1 = e1.a;
  std::vector<double> b1 = e1.b;
  kk::scan_combine(e2.a.data(), e2.b.data(), a1.data(), b1.data(), static_cast<int64_t>(n));
  out.a = std::move(a1);
  out.b = std::move(b1);
  return out;
}

}  // namespace sardet::ssm
