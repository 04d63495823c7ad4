#pragma once
#include <iosfwd>
#include <vector>

#include "vrplab/grad.hpp"
#include "vrplab/instance.hpp"
#include "vrplab/policy.hpp"

// Multi-start REINFORCE with a shared per-instance baseline: every feasible
// customer seeds one sampled rollout, the baseline is the mean objective over
// those starts, and the loss is mean_k(advantage_k * logprob_k) averaged over
// the batch. AdamW-style updates (decoupled weight decay), global-norm
// gradient clipping, optional amortized spectral normalization after each
// step. Everything is seed-deterministic and single-threaded.

namespace vrplab {

// 64 up to 125 customers, then floor(20 * (200/n)^2.5)
int batch_size_for_scale(int n);

struct train_config {
  model_config model;
  int epochs = 1;
  int steps_per_epoch = 100;
  double lr = 1e-4;
  double weight_decay = 1e-6;
  double grad_clip_norm = 1.0;
  std::vector<int> scales{50};
  std::vector<variant_flags> variants{variant_flags{}};
  std::vector<distribution_spec> distributions{distribution_spec::uniform()};
  int max_starts = 0;  // 0 = all feasible customers
  std::uint64_t seed = 0;
};

struct reinforce_terms {
  double loss = 0.0;
  std::vector<double> advantages;
};
// throws std::invalid_argument on fewer than two starts (degenerate baseline)
reinforce_terms reinforce_loss(const std::vector<double>& objectives,
                               const std::vector<double>& logprobs);

struct adam_state {
  std::vector<double> m, v;
  long t = 0;
};
void adam_step(policy_params& params, const policy_params& grads,
               adam_state& st, double lr, double weight_decay);

// scales grads to the max norm when exceeded; returns the pre-clip L2 norm
double clip_gradients(policy_params& grads, double max_norm);

struct step_metrics {
  int epoch = 0;
  int step = 0;  // global step index, 1-based
  double loss = 0.0;
  double mean_obj = 0.0;
  double grad_norm_preclip = 0.0;
};

struct train_result {
  policy_params params;
  std::vector<step_metrics> log;
};

inline constexpr const char* kMetricsCsvHeader =
    "epoch,step,loss,mean_obj,grad_norm_preclip";

// csv (optional) receives the header plus one row per step as training runs
train_result train(const train_config& cfg, std::ostream* csv);

}  // namespace vrplab
