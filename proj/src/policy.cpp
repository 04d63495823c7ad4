#include "vrplab/policy.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "vrplab/kernels.hpp"

namespace vrplab {
namespace {

using json = nlohmann::ordered_json;
namespace kn = vrplab::kernels;

double vec_norm(const std::vector<double>& v) {
  return std::sqrt(kn::dot(v.data(), v.data(), v.size()));
}

// returns false when the vector is numerically zero
bool normalize(std::vector<double>& v) {
  const double n = vec_norm(v);
  if (n < 1e-300) return false;
  kn::scale(v.data(), v.size(), 1.0 / n);
  return true;
}

void copy_head(const mat& src, mat& dst, int head, int dk) {
  for (int i = 0; i < src.rows; ++i)
    std::memcpy(dst.row(i), src.row(i) + head * dk, dk * sizeof(double));
}

void add_head(mat& dst, const mat& src, int head, int dk) {
  for (int i = 0; i < src.rows; ++i)
    std::memcpy(dst.row(i) + head * dk, src.row(i), dk * sizeof(double));
}

// y = rmsnorm(x) rowwise; records 1/rms per row
void rms_rows(const mat& x, const mat& gain, mat& y,
              std::vector<double>& inv) {
  inv.resize(x.rows);
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    const double ss = kn::dot(xi, xi, x.cols);
    inv[i] = 1.0 / std::sqrt(ss / x.cols + kRmsEps);
    for (int j = 0; j < x.cols; ++j) y.at(i, j) = xi[j] * inv[i] * gain.at(0, j);
  }
}

}  // namespace

std::vector<tensor_ref> tensors(policy_params& p) {
  std::vector<tensor_ref> out;
  out.push_back({"w_in", &p.w_in, true});
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& lp = p.layers[l];
    const std::string pre = "layers." + std::to_string(l) + ".";
    out.push_back({pre + "wq", &lp.wq, true});
    out.push_back({pre + "wk", &lp.wk, true});
    out.push_back({pre + "wv", &lp.wv, true});
    out.push_back({pre + "wo", &lp.wo, true});
    out.push_back({pre + "w1", &lp.w1, true});
    out.push_back({pre + "w2", &lp.w2, true});
    out.push_back({pre + "w3", &lp.w3, true});
    out.push_back({pre + "g1", &lp.g1, false});
    out.push_back({pre + "g2", &lp.g2, false});
  }
  out.push_back({"w_c", &p.w_c, true});
  out.push_back({"dec_q", &p.dec_q, true});
  out.push_back({"dec_k", &p.dec_k, true});
  out.push_back({"dec_v", &p.dec_v, true});
  out.push_back({"dec_o", &p.dec_o, true});
  return out;
}

std::vector<tensor_ref> tensors(const policy_params& p) {
  return tensors(const_cast<policy_params&>(p));
}

static void shape_params(policy_params& p) {
  const int dh = p.cfg.hidden(), dff = p.cfg.ffn_dim();
  p.w_in = mat(p.cfg.input_dim(), dh);
  p.layers.assign(p.cfg.layers, {});
  for (auto& lp : p.layers) {
    lp.wq = mat(dh, dh);
    lp.wk = mat(dh, dh);
    lp.wv = mat(dh, dh);
    lp.wo = mat(dh, dh);
    lp.w1 = mat(dh, dff);
    lp.w2 = mat(dh, dff);
    lp.w3 = mat(dff, dh);
    lp.g1 = mat(1, dh);
    lp.g2 = mat(1, dh);
  }
  p.w_c = mat(dh + 5, dh);
  p.dec_q = mat(dh, dh);
  p.dec_k = mat(dh, dh);
  p.dec_v = mat(dh, dh);
  p.dec_o = mat(dh, dh);
}

policy_params init_params(const model_config& cfg, std::uint64_t seed) {
  policy_params p;
  p.cfg = cfg;
  shape_params(p);
  rng g(rng::derive(seed, 0x7061'7261'6d73ull));  // "params"
  for (auto& t : tensors(p)) {
    if (!t.is_linear) {
      for (auto& x : t.m->v) x = 1.0;
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.m->rows));
    for (auto& x : t.m->v) x = g.uniform(-bound, bound);
  }
  return p;
}

policy_params zeros_like(const policy_params& p) {
  policy_params z;
  z.cfg = p.cfg;
  shape_params(z);
  return z;
}

std::size_t flat_param_size(const policy_params& p) {
  std::size_t n = 0;
  for (const auto& t : tensors(p)) n += t.m->size();
  return n;
}

mat node_features(const problem_instance& inst, bool tw_input) {
  const int n = inst.n_nodes();
  mat f(n, tw_input ? 6 : 3);
  const bool tw = inst.variant.time_window;
  for (int i = 0; i < n; ++i) {
    f.at(i, 0) = inst.coords[i][0];
    f.at(i, 1) = inst.coords[i][1];
    // signed demand: backhaul pickups negative
    f.at(i, 2) = inst.pickup[i] ? -inst.demand[i] : inst.demand[i];
    if (tw_input && tw) {
      f.at(i, 3) = inst.tw_open[i];
      f.at(i, 4) = inst.tw_close[i];
      f.at(i, 5) = inst.service[i];
    }
  }
  return f;
}

static void encoder_layer(const layer_params& lp, const model_config& cfg,
                          const mat& x, layer_cache& c) {
  const int n = x.rows, dh = cfg.hidden(), dk = cfg.kv_dim, nh = cfg.heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  c.x = x;
  c.q = mat(n, dh);
  c.k = mat(n, dh);
  c.v = mat(n, dh);
  kn::gemm_nn(x.data(), lp.wq.data(), c.q.data(), n, dh, dh, false);
  kn::gemm_nn(x.data(), lp.wk.data(), c.k.data(), n, dh, dh, false);
  kn::gemm_nn(x.data(), lp.wv.data(), c.v.data(), n, dh, dh, false);

  c.attn.assign(nh, mat(n, n));
  c.ctx = mat(n, dh);
  mat qh(n, dk), kh(n, dk), vh(n, dk), ctxh(n, dk);
  for (int h = 0; h < nh; ++h) {
    copy_head(c.q, qh, h, dk);
    copy_head(c.k, kh, h, dk);
    copy_head(c.v, vh, h, dk);
    mat& p = c.attn[h];
    kn::gemm_nt(qh.data(), kh.data(), p.data(), n, dk, n, false);
    kn::scale(p.data(), p.size(), inv_sqrt_dk);
    for (int i = 0; i < n; ++i) kn::softmax_inplace(p.row(i), n);
    kn::gemm_nn(p.data(), vh.data(), ctxh.data(), n, n, dk, false);
    add_head(c.ctx, ctxh, h, dk);
  }
  c.attn_out = mat(n, dh);
  kn::gemm_nn(c.ctx.data(), lp.wo.data(), c.attn_out.data(), n, dh, dh, false);

  c.r1 = mat(n, dh);
  for (std::size_t i = 0; i < c.r1.size(); ++i)
    c.r1.v[i] = x.v[i] + c.attn_out.v[i];
  c.h1 = mat(n, dh);
  rms_rows(c.r1, lp.g1, c.h1, c.inv1);

  const int dff = cfg.ffn_dim();
  c.a = mat(n, dff);
  c.b = mat(n, dff);
  kn::gemm_nn(c.h1.data(), lp.w1.data(), c.a.data(), n, dh, dff, false);
  kn::gemm_nn(c.h1.data(), lp.w2.data(), c.b.data(), n, dh, dff, false);
  c.s = mat(n, dff);
  for (std::size_t i = 0; i < c.s.size(); ++i)
    c.s.v[i] = kn::swish(c.a.v[i]) * c.b.v[i];
  c.ffn_out = mat(n, dh);
  kn::gemm_nn(c.s.data(), lp.w3.data(), c.ffn_out.data(), n, dff, dh, false);

  c.r2 = mat(n, dh);
  for (std::size_t i = 0; i < c.r2.size(); ++i)
    c.r2.v[i] = c.h1.v[i] + c.ffn_out.v[i];
  c.h2 = mat(n, dh);
  rms_rows(c.r2, lp.g2, c.h2, c.inv2);
}

mat encode(const policy_params& p, const problem_instance& inst,
           encoder_cache* cache) {
  encoder_cache local;
  encoder_cache& c = cache ? *cache : local;
  c.features = node_features(inst, p.cfg.tw_input);
  const int n = inst.n_nodes(), dh = p.cfg.hidden();
  mat h(n, dh);
  kn::gemm_nn(c.features.data(), p.w_in.data(), h.data(), n,
              c.features.cols, dh, false);
  c.layers.resize(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    encoder_layer(p.layers[l], p.cfg, h, c.layers[l]);
    h = c.layers[l].h2;
  }
  return h;
}

policy_context make_context(const policy_params& p,
                            const problem_instance& inst,
                            encoder_cache* cache) {
  policy_context ctx;
  ctx.h = encode(p, inst, cache);
  const int n = ctx.h.rows, dh = p.cfg.hidden();
  ctx.k = mat(n, dh);
  ctx.v = mat(n, dh);
  kn::gemm_nn(ctx.h.data(), p.dec_k.data(), ctx.k.data(), n, dh, dh, false);
  kn::gemm_nn(ctx.h.data(), p.dec_v.data(), ctx.v.data(), n, dh, dh, false);
  return ctx;
}

std::array<double, 5> context_scalars(const route_state& s) {
  const auto& v = s.inst->variant;
  const double z = v.time_window ? s.clock : s.clock / kTimeHorizon;
  const double l = v.duration_limit ? s.remaining_route_len() : 1.0;
  return {s.load_linehaul, s.load_backhaul, z, l, v.open_route ? 1.0 : 0.0};
}

std::vector<double> decode_step(const policy_params& p,
                                const policy_context& ctx,
                                const route_state& s,
                                const std::vector<std::uint8_t>& mask,
                                decode_cache* cache) {
  const int n = ctx.h.rows, dh = p.cfg.hidden(), dk = p.cfg.kv_dim,
            nh = p.cfg.heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  decode_cache local;
  decode_cache& c = cache ? *cache : local;

  c.feas.clear();
  for (int i = 0; i < n; ++i)
    if (mask[i]) c.feas.push_back(i);
  const int nf = static_cast<int>(c.feas.size());
  if (nf == 0) throw std::runtime_error("decode_step: empty feasible set");

  c.scal = context_scalars(s);
  c.ctx_in.assign(dh + 5, 0.0);
  std::memcpy(c.ctx_in.data(), ctx.h.row(s.current), dh * sizeof(double));
  for (int j = 0; j < 5; ++j) c.ctx_in[dh + j] = c.scal[j];

  c.h_c.assign(dh, 0.0);
  kn::gemm_nn(c.ctx_in.data(), p.w_c.data(), c.h_c.data(), 1, dh + 5, dh,
              false);
  c.q.assign(dh, 0.0);
  kn::gemm_nn(c.h_c.data(), p.dec_q.data(), c.q.data(), 1, dh, dh, false);

  // single-query attention over the feasible embeddings
  c.attn = mat(nh, nf);
  c.ctx.assign(dh, 0.0);
  for (int h = 0; h < nh; ++h) {
    double* pr = c.attn.row(h);
    const double* qh = c.q.data() + h * dk;
    for (int j = 0; j < nf; ++j)
      pr[j] = kn::dot(qh, ctx.k.row(c.feas[j]) + h * dk, dk) * inv_sqrt_dk;
    kn::softmax_inplace(pr, nf);
    double* out = c.ctx.data() + h * dk;
    for (int j = 0; j < nf; ++j)
      kn::axpy(pr[j], ctx.v.row(c.feas[j]) + h * dk, out, dk);
  }
  c.q_c.assign(dh, 0.0);
  kn::gemm_nn(c.ctx.data(), p.dec_o.data(), c.q_c.data(), 1, dh, dh, false);

  c.tanh_t.resize(nf);
  std::vector<double> u(nf);
  for (int j = 0; j < nf; ++j) {
    const double compat =
        kn::dot(c.q_c.data(), ctx.h.row(c.feas[j]), dh) * inv_sqrt_dk;
    c.tanh_t[j] = std::tanh(compat);
    u[j] = p.cfg.logit_clip * c.tanh_t[j];
  }
  kn::softmax_inplace(u.data(), nf);
  c.probs = u;

  std::vector<double> full(n, 0.0);
  for (int j = 0; j < nf; ++j) full[c.feas[j]] = u[j];
  return full;
}

std::optional<rollout_result> rollout(const policy_params& p,
                                      const policy_context& ctx,
                                      const problem_instance& inst,
                                      int first_customer, decode_mode mode,
                                      rng* sampler) {
  route_state s = reset(inst);
  rollout_result r;
  if (first_customer > 0) {
    if (action_violation(s, first_customer) != 0) return std::nullopt;
    step(s, first_customer);  // forced start, not part of the policy logprob
  }
  const int max_steps = 4 * inst.scale + 8;
  int guard = 0;
  while (!s.done) {
    if (++guard > max_steps)
      throw std::runtime_error("rollout exceeded step bound");
    const auto mask = feasible_actions(s);
    const auto probs = decode_step(p, ctx, s, mask, nullptr);
    int action = -1;
    if (mode == decode_mode::greedy) {
      double best = -1.0;
      for (int i = 0; i < static_cast<int>(probs.size()); ++i)
        if (probs[i] > best) {
          best = probs[i];
          action = i;
        }
    } else {
      const double draw = sampler->uniform();
      double acc = 0.0;
      for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        action = i;
        if (draw < acc) break;
      }
    }
    r.logprob += std::log(probs[action]);
    step(s, action);
  }
  r.tour = s.tour;
  r.objective = solution_cost(inst, s.tour);
  return r;
}

// ---- spectral normalization ----

namespace {

void ensure_uv(const mat& w, std::vector<double>& u, std::vector<double>& v,
               std::uint64_t tag) {
  if (static_cast<int>(u.size()) == w.rows &&
      static_cast<int>(v.size()) == w.cols)
    return;
  rng g(rng::derive(0x73'70'65'63ull, tag));  // ascii "spec", spectral power iteration
  u.resize(w.rows);
  v.resize(w.cols);
  for (auto& x : u) x = g.uniform(-1.0, 1.0);
  for (auto& x : v) x = g.uniform(-1.0, 1.0);
  normalize(u);
  normalize(v);
}

// one power round; returns the sigma estimate (0 for a zero matrix)
double power_round(const mat& w, std::vector<double>& u,
                   std::vector<double>& v) {
  // v <- normalize(W^T u), u <- normalize(W v)
  kn::gemm_nn(u.data(), w.data(), v.data(), 1, w.rows, w.cols, false);
  if (!normalize(v)) return 0.0;
  std::vector<double> wv(w.rows, 0.0);
  kn::gemm_nn(w.data(), v.data(), wv.data(), w.rows, w.cols, 1, false);
  u = wv;
  if (!normalize(u)) return 0.0;
  return kn::dot(u.data(), wv.data(), u.size());
}

double power_converge(const mat& w, std::vector<double>& u,
                      std::vector<double>& v, int min_iters) {
  double sigma = 0.0, prev = -1.0;
  const int cap = min_iters + 2000;
  for (int it = 0; it < cap; ++it) {
    sigma = power_round(w, u, v);
    if (sigma == 0.0) return 0.0;
    if (it + 1 >= min_iters && std::abs(sigma - prev) <= 1e-13 * sigma) break;
    prev = sigma;
  }
  return sigma;
}

}  // namespace

double spectral_sigma(const mat& w, int iters) {
  std::vector<double> u, v;
  ensure_uv(w, u, v, 0);
  return power_converge(w, u, v, iters);
}

void spectral_normalize(policy_params& p, int iters, spectral_state* st) {
  spectral_state local;
  spectral_state& state = st ? *st : local;
  auto ts = tensors(p);
  std::size_t li = 0;
  for (auto& t : ts) {
    if (!t.is_linear) continue;
    if (state.u.size() <= li) {
      state.u.emplace_back();
      state.v.emplace_back();
    }
    ensure_uv(*t.m, state.u[li], state.v[li], li);
    const double sigma = power_converge(*t.m, state.u[li], state.v[li], iters);
    if (sigma > 0.0) kn::scale(t.m->data(), t.m->size(), 1.0 / sigma);
    ++li;
  }
  state.initialized = true;
}

void spectral_step(policy_params& p, spectral_state& st) {
  auto ts = tensors(p);
  std::size_t li = 0;
  for (auto& t : ts) {
    if (!t.is_linear) continue;
    if (st.u.size() <= li) {
      st.u.emplace_back();
      st.v.emplace_back();
    }
    ensure_uv(*t.m, st.u[li], st.v[li], li);
    const double sigma = power_round(*t.m, st.u[li], st.v[li]);
    if (sigma > 0.0) kn::scale(t.m->data(), t.m->size(), 1.0 / sigma);
    ++li;
  }
  st.initialized = true;
}

// ---- checkpoints ----

void save_checkpoint(const policy_params& p, const std::string& stem) {
  const auto ts = tensors(p);
  json manifest;
  manifest["format_version"] = 1;
  manifest["dtype"] = "f32";
  manifest["byte_order"] = "little";
  manifest["config"] = {
      {"layers", p.cfg.layers},       {"heads", p.cfg.heads},
      {"kv_dim", p.cfg.kv_dim},       {"ffn_mult", p.cfg.ffn_mult},
      {"logit_clip", p.cfg.logit_clip},
      {"spectral_norm", p.cfg.spectral_norm},
      {"tw_input", p.cfg.tw_input},   {"preset", p.cfg.preset}};
  json list = json::array();
  std::size_t offset = 0;
  for (const auto& t : ts) {
    list.push_back({{"name", t.name},
                    {"rows", t.m->rows},
                    {"cols", t.m->cols},
                    {"offset", offset}});
    offset += t.m->size();
  }
  manifest["tensors"] = std::move(list);

  const std::filesystem::path base(stem);
  if (base.has_parent_path())
    std::filesystem::create_directories(base.parent_path());
  std::ofstream mj(stem + ".json");
  if (!mj) throw std::runtime_error("cannot write " + stem + ".json");
  mj << manifest.dump(2) << "\n";

  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + stem + ".bin");
  std::vector<float> buf;
  for (const auto& t : ts) {
    buf.resize(t.m->size());
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = static_cast<float>(t.m->v[i]);
    bin.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

policy_params load_checkpoint(const std::string& stem) {
  std::ifstream mj(stem + ".json");
  if (!mj) throw std::runtime_error("cannot read " + stem + ".json");
  json manifest = json::parse(mj);
  if (manifest.value("format_version", 0) != 1)
    throw std::runtime_error("checkpoint: unsupported format_version");
  if (manifest.value("dtype", "") != "f32" ||
      manifest.value("byte_order", "") != "little")
    throw std::runtime_error("checkpoint: unsupported encoding");

  const auto& jc = manifest.at("config");
  model_config cfg;
  cfg.layers = jc.at("layers").get<int>();
  cfg.heads = jc.at("heads").get<int>();
  cfg.kv_dim = jc.at("kv_dim").get<int>();
  cfg.ffn_mult = jc.at("ffn_mult").get<double>();
  cfg.logit_clip = jc.at("logit_clip").get<double>();
  cfg.spectral_norm = jc.at("spectral_norm").get<bool>();
  cfg.tw_input = jc.at("tw_input").get<bool>();
  cfg.preset = jc.at("preset").get<std::string>();

  policy_params p;
  p.cfg = cfg;
  shape_params(p);
  auto ts = tensors(p);
  const auto& list = manifest.at("tensors");
  if (list.size() != ts.size())
    throw std::runtime_error("checkpoint: tensor count mismatch");

  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + stem + ".bin");
  std::size_t expect_offset = 0;
  std::vector<float> buf;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& e = list[i];
    if (e.at("name").get<std::string>() != ts[i].name ||
        e.at("rows").get<int>() != ts[i].m->rows ||
        e.at("cols").get<int>() != ts[i].m->cols ||
        e.at("offset").get<std::size_t>() != expect_offset)
      throw std::runtime_error("checkpoint: tensor layout mismatch at " +
                               ts[i].name);
    buf.resize(ts[i].m->size());
    bin.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!bin) throw std::runtime_error("checkpoint: truncated buffer");
    for (std::size_t j = 0; j < buf.size(); ++j)
      ts[i].m->v[j] = static_cast<double>(buf[j]);
    expect_offset += buf.size();
  }
  char extra;
  if (bin.read(&extra, 1))
    throw std::runtime_error("checkpoint: trailing bytes in buffer");
  return p;
}

}  // namespace vrplab
