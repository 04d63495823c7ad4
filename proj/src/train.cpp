#include "vrplab/train.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace vrplab {
namespace {

constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

// rng sub-stream tags for training
constexpr std::uint64_t kStreamSpec = 0x7370;      // batch (variant,dist,scale)
constexpr std::uint64_t kStreamInstance = 0x696e;  // fresh batch instances
constexpr std::uint64_t kStreamRollout = 0x726f;   // per-rollout samplers

}  // namespace

int batch_size_for_scale(int n) {
  if (n <= 125) return 64;
  return static_cast<int>(20.0 * std::pow(200.0 / n, 2.5));
}

reinforce_terms reinforce_loss(const std::vector<double>& objectives,
                               const std::vector<double>& logprobs) {
  if (objectives.size() != logprobs.size())
    throw std::invalid_argument("reinforce_loss: size mismatch");
  if (objectives.size() < 2)
    throw std::invalid_argument(
        "reinforce_loss: needs at least two starts for the shared baseline");
  double b = 0.0;
  for (double o : objectives) b += o;
  b /= static_cast<double>(objectives.size());
  reinforce_terms t;
  t.advantages.resize(objectives.size());
  for (std::size_t k = 0; k < objectives.size(); ++k) {
    t.advantages[k] = objectives[k] - b;
    t.loss += t.advantages[k] * logprobs[k];
  }
  t.loss /= static_cast<double>(objectives.size());
  return t;
}

void adam_step(policy_params& params, const policy_params& grads,
               adam_state& st, double lr, double weight_decay) {
  auto tp = tensors(params);
  auto tg = tensors(const_cast<policy_params&>(grads));
  const std::size_t total = flat_param_size(params);
  if (st.m.size() != total) {
    st.m.assign(total, 0.0);
    st.v.assign(total, 0.0);
    st.t = 0;
  }
  ++st.t;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.t));
  std::size_t off = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    double* w = tp[i].m->data();
    const double* g = tg[i].m->data();
    for (std::size_t j = 0; j < tp[i].m->size(); ++j, ++off) {
      st.m[off] = kBeta1 * st.m[off] + (1.0 - kBeta1) * g[j];
      st.v[off] = kBeta2 * st.v[off] + (1.0 - kBeta2) * g[j] * g[j];
      const double mhat = st.m[off] / bc1;
      const double vhat = st.v[off] / bc2;
      w[j] -= lr * (mhat / (std::sqrt(vhat) + kAdamEps) +
                    weight_decay * w[j]);
    }
  }
}

double clip_gradients(policy_params& grads, double max_norm) {
  double ss = 0.0;
  auto ts = tensors(grads);
  for (auto& t : ts)
    for (double g : t.m->v) ss += g * g;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& t : ts)
      for (double& g : t.m->v) g *= s;
  }
  return norm;
}

train_result train(const train_config& cfg, std::ostream* csv) {
  if (cfg.scales.empty() || cfg.variants.empty() || cfg.distributions.empty())
    throw std::invalid_argument("train: empty sample sets");

  train_result out;
  out.params = init_params(cfg.model, cfg.seed);
  spectral_state sn;
  if (cfg.model.spectral_norm) spectral_normalize(out.params, 30, &sn);

  adam_state adam;
  rng spec_rng(rng::derive(cfg.seed, kStreamSpec));
  const std::uint64_t inst_base = rng::derive(cfg.seed, kStreamInstance);
  const std::uint64_t roll_base = rng::derive(cfg.seed, kStreamRollout);

  if (csv) *csv << kMetricsCsvHeader << "\n";

  int gstep = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      ++gstep;
      // one (variant, distribution, scale) triple per step
      generator_config gc;
      gc.variant = cfg.variants[spec_rng.uniform_int(cfg.variants.size())];
      gc.dist =
          cfg.distributions[spec_rng.uniform_int(cfg.distributions.size())];
      gc.scale = cfg.scales[spec_rng.uniform_int(cfg.scales.size())];
      const int batch = batch_size_for_scale(gc.scale);

      const std::uint64_t step_inst =
          rng::derive(inst_base, static_cast<std::uint64_t>(gstep));
      const std::uint64_t step_roll =
          rng::derive(roll_base, static_cast<std::uint64_t>(gstep));

      policy_params grads = zeros_like(out.params);
      double loss_sum = 0.0, obj_sum = 0.0;
      long n_rollouts = 0;
      int contributing = 0;

      for (int bi = 0; bi < batch; ++bi) {
        generator_config gci = gc;
        gci.seed = rng::derive(step_inst, static_cast<std::uint64_t>(bi));
        const problem_instance inst = generate_instance(gci);
        const policy_context ctx = make_context(out.params, inst, nullptr);
        const std::uint64_t inst_roll =
            rng::derive(step_roll, static_cast<std::uint64_t>(bi));

        std::vector<std::vector<int>> tours;
        std::vector<double> objectives, logprobs;
        for (int k = 1; k <= inst.scale; ++k) {
          if (cfg.max_starts > 0 &&
              static_cast<int>(tours.size()) >= cfg.max_starts)
            break;
          rng sampler(rng::derive(inst_roll, static_cast<std::uint64_t>(k)));
          auto r = rollout(out.params, ctx, inst, k, decode_mode::sample,
                           &sampler);
          if (!r) continue;  // infeasible forced start, skipped
          tours.push_back(std::move(r->tour));
          objectives.push_back(r->objective);
          logprobs.push_back(r->logprob);
        }
        obj_sum += [&] {
          double t = 0.0;
          for (double o : objectives) t += o;
          return t;
        }();
        n_rollouts += static_cast<long>(objectives.size());
        if (objectives.size() < 2) continue;  // degenerate baseline

        const reinforce_terms rt = reinforce_loss(objectives, logprobs);
        loss_sum += rt.loss;
        ++contributing;
        std::vector<double> weights(rt.advantages.size());
        const double kinv = 1.0 / static_cast<double>(rt.advantages.size());
        for (std::size_t k = 0; k < weights.size(); ++k)
          weights[k] = rt.advantages[k] * kinv / batch;
        backward_rollouts(out.params, inst, tours, weights, true, grads);
      }

      const double norm = clip_gradients(grads, cfg.grad_clip_norm);
      adam_step(out.params, grads, adam, cfg.lr, cfg.weight_decay);
      if (cfg.model.spectral_norm) spectral_step(out.params, sn);

      step_metrics m;
      m.epoch = epoch;
      m.step = gstep;
      m.loss = contributing > 0 ? loss_sum / batch : 0.0;
      m.mean_obj = n_rollouts > 0 ? obj_sum / n_rollouts : 0.0;
      m.grad_norm_preclip = norm;
      out.log.push_back(m);
      if (csv)
        *csv << m.epoch << "," << m.step << "," << m.loss << ","
             << m.mean_obj << "," << m.grad_norm_preclip << "\n";
    }
  }
  return out;
}

}  // namespace vrplab
