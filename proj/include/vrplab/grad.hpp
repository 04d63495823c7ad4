#pragma once
#include <vector>

#include "vrplab/policy.hpp"

// Reverse-mode gradients of rollout log-probabilities, hand-derived to mirror
// the forward pass exactly (same kernels, double precision). Tours are full
// node sequences starting at the depot; with forced_start the second node is
// the multi-start action and contributes neither logprob nor gradient.

namespace vrplab {

double tour_logprob(const policy_params& p, const problem_instance& inst,
                    const std::vector<int>& tour, bool forced_start);

// accumulates sum_k weights[k] * d logprob(tours[k]) / d params into grads;
// the encoder backward runs once for the whole set. returns per-tour logprobs
std::vector<double> backward_rollouts(
    const policy_params& p, const problem_instance& inst,
    const std::vector<std::vector<int>>& tours,
    const std::vector<double>& weights, bool forced_start,
    policy_params& grads);

}  // namespace vrplab
