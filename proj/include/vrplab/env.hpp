#pragma once
#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vrplab/instance.hpp"

// Sequential route-construction environment. A solution is the flat node
// sequence starting at the depot; depot visits delimit routes. Feasibility is
// decided by five rules (repeat visits, return-to-depot budget, time windows,
// backhaul precedence, capacity); open-route variants skip the return rule and
// pay no cost on edges into the depot.

namespace vrplab {

// slack for float comparisons in feasibility checks (loads/clock accumulate
// rounding; demands are exact multiples of 1/C)
inline constexpr double kFeasEps = 1e-9;

struct route_state {
  const problem_instance* inst = nullptr;
  int current = 0;  // tau_t
  std::vector<std::uint8_t> visited;
  int n_visited = 0;
  int linehaul_left = 0;       // unserved non-pickup customers (global)
  double load_linehaul = 1.0;  // c^l, remaining normalized capacity
  double load_backhaul = 1.0;  // c^b
  double clock = 0.0;          // z_t, resets at each depot departure
  double consumed = 0.0;       // route distance so far
  bool done = false;
  std::vector<int> tour;  // starts with 0

  // l_t = rho - consumed; +inf when the variant has no distance limit
  double remaining_route_len() const {
    return inst->variant.duration_limit
               ? inst->route_limit - consumed
               : std::numeric_limits<double>::infinity();
  }
};

route_state reset(const problem_instance& inst);

// why `action` is disallowed from state `s`: 0 = feasible, else the rule id
//   1 repeat visit / depot-to-depot,  2 return budget (time or distance),
//   3 time window,                    4 backhaul precedence,
//   5 capacity
int action_violation(const route_state& s, int action);
const char* violation_name(int rule);

std::vector<std::uint8_t> feasible_actions(const route_state& s);

// applies a feasible action; throws std::runtime_error (with a state dump)
// on an infeasible one
void step(route_state& s, int action);

// multi-start: reset then force `first_customer` as the second action;
// nullopt when that start is infeasible and should be skipped
std::optional<route_state> reset_with_start(const problem_instance& inst,
                                            int first_customer);

double solution_cost(const problem_instance& inst,
                     const std::vector<int>& tour);

struct validation_result {
  bool feasible = false;
  double objective = 0.0;
  std::string reason;  // empty when feasible
};
validation_result validate_solution(const problem_instance& inst,
                                    const std::vector<int>& tour);

// the 8 symmetries of the unit square, identity first:
// (x,y) (y,x) (x,1-y) (y,1-x) (1-x,y) (1-y,x) (1-x,1-y) (1-y,1-x)
std::array<problem_instance, 8> augment8(const problem_instance& inst);

}  // namespace vrplab
