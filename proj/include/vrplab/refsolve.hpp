#pragma once
#include <vector>

#include "vrplab/env.hpp"

// Reference objectives for gap computation. solve_exact is a depth-first
// branch-and-bound over the environment's own action space (so it optimizes
// exactly the set of tours the policy may emit), seeded with the heuristic
// incumbent and pruned by a min-incoming-edge bound; capped at 10 customers.
// solve_heuristic is deterministic cheapest feasible insertion followed by
// intra-route 2-opt and relocate, all moves re-validated under the env rules.

namespace vrplab {

struct ref_solution {
  std::vector<int> tour;
  double objective = 0.0;
};

ref_solution solve_exact(const problem_instance& inst);  // scale <= 10
ref_solution solve_heuristic(const problem_instance& inst);

}  // namespace vrplab
