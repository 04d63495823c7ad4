#pragma once
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vrplab/env.hpp"
#include "vrplab/mat.hpp"
#include "vrplab/model.hpp"
#include "vrplab/rng.hpp"

// Attention policy over route states: transformer encoder (pre-projection,
// L x [self-attention + RMSNorm, SwiGLU + RMSNorm]) run once per instance,
// then a pointer-style decoder queried per step over the feasible set with
// clipped-tanh logits. All math in double; checkpoints store f32.

namespace vrplab {

inline constexpr double kRmsEps = 1e-6;

struct layer_params {
  mat wq, wk, wv, wo;  // d_h x d_h
  mat w1, w2;          // d_h x d_ff (SwiGLU gate / value)
  mat w3;              // d_ff x d_h
  mat g1, g2;          // RMSNorm gains, 1 x d_h
};

struct policy_params {
  model_config cfg;
  mat w_in;  // in_dim x d_h
  std::vector<layer_params> layers;
  mat w_c;                          // (d_h + 5) x d_h context projection
  mat dec_q, dec_k, dec_v, dec_o;  // d_h x d_h decoder attention
};

struct tensor_ref {
  std::string name;
  mat* m;
  bool is_linear;  // spectral norm applies; false for RMSNorm gains
};

// stable order; checkpoint layout, optimizer state and spectral-norm state
// all index tensors by position in this list
std::vector<tensor_ref> tensors(policy_params& p);
std::vector<tensor_ref> tensors(const policy_params& p);  // const data view

// weights U[-1/sqrt(fan_in), 1/sqrt(fan_in)], gains 1; one rng stream drawn
// in tensors() order
policy_params init_params(const model_config& cfg, std::uint64_t seed);
policy_params zeros_like(const policy_params& p);
std::size_t flat_param_size(const policy_params& p);

// node features (x, y, delta, t_open, t_close, t_service); pickup demands are
// negated so the encoder can tell backhauls apart; window slots zero-padded
// when the variant has none; 3-d when cfg.tw_input is false
mat node_features(const problem_instance& inst, bool tw_input);

struct layer_cache {
  mat x, q, k, v;
  std::vector<mat> attn;  // per head, n x n probabilities
  mat ctx, attn_out;      // heads concat, then after Wo
  mat r1, h1;             // first residual and its norm
  std::vector<double> inv1;
  mat a, b, s;            // SwiGLU pre-activations and product
  mat ffn_out, r2, h2;
  std::vector<double> inv2;
};

struct encoder_cache {
  mat features;
  std::vector<layer_cache> layers;
};

// encoder output H (n x d_h); fills cache when given
mat encode(const policy_params& p, const problem_instance& inst,
           encoder_cache* cache);

struct policy_context {
  mat h;     // encoder output
  mat k, v;  // decoder keys/values, precomputed once per instance
};
policy_context make_context(const policy_params& p,
                            const problem_instance& inst,
                            encoder_cache* cache = nullptr);

// decoder scalar inputs [c_l, c_b, z, l, o]: loads raw, clock raw with
// windows else normalized by the horizon, remaining route length raw with
// sentinel 1.0 when the variant has no limit, open flag 0/1
std::array<double, 5> context_scalars(const route_state& s);

struct decode_cache {
  std::vector<int> feas;  // feasible node ids, ascending
  std::array<double, 5> scal{};
  std::vector<double> ctx_in, h_c, q, ctx, q_c;
  mat attn;                    // heads x |feas|
  std::vector<double> tanh_t;  // tanh(compat) per feasible node
  std::vector<double> probs;   // over feas
};

// action distribution over all n nodes (exact zeros off the feasible set)
std::vector<double> decode_step(const policy_params& p,
                                const policy_context& ctx,
                                const route_state& s,
                                const std::vector<std::uint8_t>& mask,
                                decode_cache* cache);

enum class decode_mode { greedy, sample };

struct rollout_result {
  std::vector<int> tour;  // starts at the depot
  double objective = 0.0;
  double logprob = 0.0;
};

// first_customer > 0 forces the second action (multi-start); nullopt when
// that start is infeasible. first_customer == 0 leaves the start free.
std::optional<rollout_result> rollout(const policy_params& p,
                                      const policy_context& ctx,
                                      const problem_instance& inst,
                                      int first_customer, decode_mode mode,
                                      rng* sampler);

// ---- spectral normalization ----
struct spectral_state {
  // u/v per linear tensor, indexed like tensors() restricted to is_linear
  std::vector<std::vector<double>> u, v;
  bool initialized = false;
};

// divides every linear weight by its power-iteration sigma estimate; runs at
// least `iters` rounds per matrix and continues until the estimate settles,
// so sigma(W / sigma_hat) <= 1 + tol afterwards. zero matrices are left alone
void spectral_normalize(policy_params& p, int iters,
                        spectral_state* st = nullptr);
// amortized variant for training: one power round per matrix, then rescale
void spectral_step(policy_params& p, spectral_state& st);
// sigma estimate for one matrix with fresh start vectors
double spectral_sigma(const mat& w, int iters);

// ---- checkpoints: <stem>.json manifest + <stem>.bin f32 little-endian ----
void save_checkpoint(const policy_params& p, const std::string& stem);
policy_params load_checkpoint(const std::string& stem);

}  // namespace vrplab
