#include "vrplab/grad.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "vrplab/kernels.hpp"

namespace vrplab {
namespace {

namespace kn = vrplab::kernels;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// dx and dgain from rowwise y = x * inv * g with inv = 1/sqrt(mean(x^2)+eps)
void rms_backward(const mat& x, const mat& gain,
                  const std::vector<double>& inv, const mat& dy, mat& dx,
                  mat& dgain) {
  const int n = x.rows, d = x.cols;
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    const double* dyi = dy.row(i);
    double* dxi = dx.row(i);
    double dotv = 0.0;
    for (int j = 0; j < d; ++j) dotv += dyi[j] * gain.at(0, j) * xi[j];
    const double k = inv[i] * inv[i] * inv[i] * dotv / d;
    for (int j = 0; j < d; ++j) {
      dxi[j] = dyi[j] * gain.at(0, j) * inv[i] - xi[j] * k;
      dgain.at(0, j) += dyi[j] * xi[j] * inv[i];
    }
  }
}

void extract_head(const mat& src, mat& dst, int head, int dk) {
  for (int i = 0; i < src.rows; ++i)
    std::memcpy(dst.row(i), src.row(i) + head * dk, dk * sizeof(double));
}

void scatter_head(mat& dst, const mat& src, int head, int dk) {
  for (int i = 0; i < src.rows; ++i)
    std::memcpy(dst.row(i) + head * dk, src.row(i), dk * sizeof(double));
}

// backward through one encoder layer; d_out is the grad at c.h2, returns
// grad at c.x while accumulating parameter grads
mat encoder_layer_backward(const layer_params& lp, const model_config& cfg,
                           const layer_cache& c, const mat& d_out,
                           layer_params& g) {
  const int n = c.x.rows, dh = cfg.hidden(), dff = cfg.ffn_dim(),
            dk = cfg.kv_dim, nh = cfg.heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  mat dr2(n, dh);
  rms_backward(c.r2, lp.g2, c.inv2, d_out, dr2, g.g2);

  // r2 = h1 + s * w3
  mat dh1 = dr2;  // residual branch
  kn::gemm_tn(c.s.data(), dr2.data(), g.w3.data(), dff, n, dh, true);
  mat ds(n, dff);
  kn::gemm_nt(dr2.data(), lp.w3.data(), ds.data(), n, dh, dff, false);

  mat da(n, dff), db(n, dff);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double av = c.a.v[i];
    const double sg = sigmoid(av);
    const double sw = av * sg;
    da.v[i] = ds.v[i] * c.b.v[i] * (sg + sw * (1.0 - sg));  // swish'(a)
    db.v[i] = ds.v[i] * sw;
  }
  kn::gemm_nt(da.data(), lp.w1.data(), dh1.data(), n, dff, dh, true);
  kn::gemm_nt(db.data(), lp.w2.data(), dh1.data(), n, dff, dh, true);
  kn::gemm_tn(c.h1.data(), da.data(), g.w1.data(), dh, n, dff, true);
  kn::gemm_tn(c.h1.data(), db.data(), g.w2.data(), dh, n, dff, true);

  mat dr1(n, dh);
  rms_backward(c.r1, lp.g1, c.inv1, dh1, dr1, g.g1);

  // r1 = x + ctx * wo
  mat dx = dr1;
  kn::gemm_tn(c.ctx.data(), dr1.data(), g.wo.data(), dh, n, dh, true);
  mat dctx(n, dh);
  kn::gemm_nt(dr1.data(), lp.wo.data(), dctx.data(), n, dh, dh, false);

  mat dq(n, dh), dkm(n, dh), dvm(n, dh);
  mat qh(n, dk), kh(n, dk), vh(n, dk), dch(n, dk);
  mat dp(n, n), dsc(n, n), dqh(n, dk), dkh(n, dk), dvh(n, dk);
  for (int h = 0; h < nh; ++h) {
    extract_head(c.q, qh, h, dk);
    extract_head(c.k, kh, h, dk);
    extract_head(c.v, vh, h, dk);
    extract_head(dctx, dch, h, dk);
    const mat& pm = c.attn[h];
    // ctx_h = P v_h
    kn::gemm_nt(dch.data(), vh.data(), dp.data(), n, dk, n, false);
    kn::gemm_tn(pm.data(), dch.data(), dvh.data(), n, n, dk, false);
    for (int i = 0; i < n; ++i) {
      const double* pi = pm.row(i);
      const double* dpi = dp.row(i);
      double* dsi = dsc.row(i);
      const double dot = kn::dot(pi, dpi, n);
      for (int j = 0; j < n; ++j) dsi[j] = pi[j] * (dpi[j] - dot);
    }
    kn::scale(dsc.data(), dsc.size(), inv_sqrt_dk);
    kn::gemm_nn(dsc.data(), kh.data(), dqh.data(), n, n, dk, false);
    kn::gemm_tn(dsc.data(), qh.data(), dkh.data(), n, n, dk, false);
    scatter_head(dq, dqh, h, dk);
    scatter_head(dkm, dkh, h, dk);
    scatter_head(dvm, dvh, h, dk);
  }
  kn::gemm_nt(dq.data(), lp.wq.data(), dx.data(), n, dh, dh, true);
  kn::gemm_nt(dkm.data(), lp.wk.data(), dx.data(), n, dh, dh, true);
  kn::gemm_nt(dvm.data(), lp.wv.data(), dx.data(), n, dh, dh, true);
  kn::gemm_tn(c.x.data(), dq.data(), g.wq.data(), dh, n, dh, true);
  kn::gemm_tn(c.x.data(), dkm.data(), g.wk.data(), dh, n, dh, true);
  kn::gemm_tn(c.x.data(), dvm.data(), g.wv.data(), dh, n, dh, true);
  return dx;
}

// backward through one decode step; accumulates into param grads and the
// per-instance dH/dK/dV accumulators
void decode_step_backward(const policy_params& p, const policy_context& ctx,
                          const decode_cache& c, int current, int chosen_pos,
                          double w, policy_params& g, mat& d_h, mat& d_k,
                          mat& d_v) {
  const int dh = p.cfg.hidden(), dk = p.cfg.kv_dim, nh = p.cfg.heads;
  const int nf = static_cast<int>(c.feas.size());
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  // d log p[chosen] / du_j = 1[j = chosen] - p_j
  std::vector<double> dq_c(dh, 0.0);
  for (int j = 0; j < nf; ++j) {
    const double du = w * ((j == chosen_pos ? 1.0 : 0.0) - c.probs[j]);
    const double dcompat =
        du * p.cfg.logit_clip * (1.0 - c.tanh_t[j] * c.tanh_t[j]) *
        inv_sqrt_dk;
    if (dcompat == 0.0) continue;
    kn::axpy(dcompat, ctx.h.row(c.feas[j]), dq_c.data(), dh);
    kn::axpy(dcompat, c.q_c.data(), d_h.row(c.feas[j]), dh);
  }

  // q_c = ctx_vec * dec_o
  std::vector<double> dctx(dh, 0.0);
  kn::gemm_nt(dq_c.data(), p.dec_o.data(), dctx.data(), 1, dh, dh, false);
  kn::gemm_tn(c.ctx.data(), dq_c.data(), g.dec_o.data(), dh, 1, dh, true);

  std::vector<double> dq_vec(dh, 0.0);
  std::vector<double> dp(nf), dsc(nf);
  for (int h = 0; h < nh; ++h) {
    const double* dch = dctx.data() + h * dk;
    const double* pr = c.attn.row(h);
    const double* qh = c.q.data() + h * dk;
    double pd = 0.0;
    for (int j = 0; j < nf; ++j) {
      dp[j] = kn::dot(dch, ctx.v.row(c.feas[j]) + h * dk, dk);
      kn::axpy(pr[j], dch, d_v.row(c.feas[j]) + h * dk, dk);
      pd += pr[j] * dp[j];
    }
    double* dqh = dq_vec.data() + h * dk;
    for (int j = 0; j < nf; ++j) {
      dsc[j] = pr[j] * (dp[j] - pd) * inv_sqrt_dk;
      if (dsc[j] == 0.0) continue;
      kn::axpy(dsc[j], ctx.k.row(c.feas[j]) + h * dk, dqh, dk);
      kn::axpy(dsc[j], qh, d_k.row(c.feas[j]) + h * dk, dk);
    }
  }

  // q = h_c * dec_q
  std::vector<double> dh_c(dh, 0.0);
  kn::gemm_nt(dq_vec.data(), p.dec_q.data(), dh_c.data(), 1, dh, dh, false);
  kn::gemm_tn(c.h_c.data(), dq_vec.data(), g.dec_q.data(), dh, 1, dh, true);

  // h_c = ctx_in * w_c; scalar slots carry no learnable upstream
  std::vector<double> dctx_in(dh + 5, 0.0);
  kn::gemm_nt(dh_c.data(), p.w_c.data(), dctx_in.data(), 1, dh, dh + 5,
              false);
  kn::gemm_tn(c.ctx_in.data(), dh_c.data(), g.w_c.data(), dh + 5, 1, dh,
              true);
  kn::axpy(1.0, dctx_in.data(), d_h.row(current), dh);
}

}  // namespace

double tour_logprob(const policy_params& p, const problem_instance& inst,
                    const std::vector<int>& tour, bool forced_start) {
  const policy_context ctx = make_context(p, inst, nullptr);
  route_state s = reset(inst);
  double lp = 0.0;
  for (std::size_t t = 1; t < tour.size(); ++t) {
    if (t == 1 && forced_start) {
      step(s, tour[t]);
      continue;
    }
    const auto mask = feasible_actions(s);
    const auto probs = decode_step(p, ctx, s, mask, nullptr);
    if (probs[tour[t]] <= 0.0)
      throw std::runtime_error("tour_logprob: infeasible action in tour");
    lp += std::log(probs[tour[t]]);
    step(s, tour[t]);
  }
  return lp;
}

std::vector<double> backward_rollouts(
    const policy_params& p, const problem_instance& inst,
    const std::vector<std::vector<int>>& tours,
    const std::vector<double>& weights, bool forced_start,
    policy_params& grads) {
  if (tours.size() != weights.size())
    throw std::invalid_argument("backward_rollouts: size mismatch");
  encoder_cache ec;
  const policy_context ctx = make_context(p, inst, &ec);
  const int n = ctx.h.rows, dh = p.cfg.hidden();

  mat d_h(n, dh), d_k(n, dh), d_v(n, dh);
  std::vector<double> logprobs(tours.size(), 0.0);
  decode_cache dc;
  for (std::size_t r = 0; r < tours.size(); ++r) {
    const auto& tour = tours[r];
    route_state s = reset(inst);
    for (std::size_t t = 1; t < tour.size(); ++t) {
      if (t == 1 && forced_start) {
        step(s, tour[t]);
        continue;
      }
      const auto mask = feasible_actions(s);
      const int current = s.current;
      decode_step(p, ctx, s, mask, &dc);
      int chosen = -1;
      for (std::size_t j = 0; j < dc.feas.size(); ++j)
        if (dc.feas[j] == tour[t]) chosen = static_cast<int>(j);
      if (chosen < 0)
        throw std::runtime_error("backward_rollouts: infeasible action");
      logprobs[r] += std::log(dc.probs[chosen]);
      if (weights[r] != 0.0)
        decode_step_backward(p, ctx, dc, current, chosen, weights[r], grads,
                             d_h, d_k, d_v);
      step(s, tour[t]);
    }
  }

  // K = H dec_k, V = H dec_v
  kn::gemm_nt(d_k.data(), p.dec_k.data(), d_h.data(), n, dh, dh, true);
  kn::gemm_tn(ctx.h.data(), d_k.data(), grads.dec_k.data(), dh, n, dh, true);
  kn::gemm_nt(d_v.data(), p.dec_v.data(), d_h.data(), n, dh, dh, true);
  kn::gemm_tn(ctx.h.data(), d_v.data(), grads.dec_v.data(), dh, n, dh, true);

  mat d = d_h;
  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l)
    d = encoder_layer_backward(p.layers[l], p.cfg, ec.layers[l], d,
                               grads.layers[l]);
  kn::gemm_tn(ec.features.data(), d.data(), grads.w_in.data(),
              ec.features.cols, n, dh, true);
  return logprobs;
}

}  // namespace vrplab
