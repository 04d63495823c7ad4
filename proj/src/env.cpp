#include "vrplab/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vrplab {

route_state reset(const problem_instance& inst) {
  route_state s;
  s.inst = &inst;
  s.visited.assign(inst.n_nodes(), 0);
  s.tour = {0};
  s.linehaul_left = 0;
  for (int i = 1; i < inst.n_nodes(); ++i)
    if (!inst.pickup[i]) ++s.linehaul_left;
  return s;
}

int action_violation(const route_state& s, int action) {
  const problem_instance& in = *s.inst;
  if (s.done || action < 0 || action >= in.n_nodes()) return 1;
  const bool open = in.variant.open_route;

  if (action == 0) {
    if (s.current == 0) return 1;  // depot-to-depot
    if (!open) {
      // guaranteed by the checks made when entering s.current; kept defensive
      if (in.variant.time_window &&
          s.clock + in.dist(s.current, 0) > kTimeHorizon + kFeasEps)
        return 2;
      if (in.variant.duration_limit &&
          s.consumed + in.dist(s.current, 0) > in.route_limit + kFeasEps)
        return 2;
    }
    return 0;
  }

  if (s.visited[action]) return 1;
  const bool pick = in.pickup[action] != 0;
  // pickups wait until every linehaul customer (anywhere) is served
  if (pick && s.linehaul_left > 0) return 4;
  if (in.demand[action] > (pick ? s.load_backhaul : s.load_linehaul) + kFeasEps)
    return 5;

  const double leg = in.dist(s.current, action);
  if (in.variant.time_window) {
    const double arrival = s.clock + leg;
    // service must start within the window
    if (arrival > in.tw_close[action] + kFeasEps) return 3;
    if (!open) {
      const double depart =
          std::max(arrival, in.tw_open[action]) + in.service[action];
      if (depart + in.dist(action, 0) > kTimeHorizon + kFeasEps) return 2;
    }
  }
  if (in.variant.duration_limit) {
    const double back = open ? 0.0 : in.dist(action, 0);
    if (s.consumed + leg + back > in.route_limit + kFeasEps) return 2;
  }
  return 0;
}

const char* violation_name(int rule) {
  switch (rule) {
    case 0: return "feasible";
    case 1: return "repeat visit";
    case 2: return "return budget";
    case 3: return "time window";
    case 4: return "backhaul precedence";
    case 5: return "capacity";
  }
  return "?";
}

std::vector<std::uint8_t> feasible_actions(const route_state& s) {
  std::vector<std::uint8_t> mask(s.inst->n_nodes(), 0);
  if (s.done) return mask;
  bool any = false;
  for (int a = 0; a < s.inst->n_nodes(); ++a) {
    mask[a] = action_violation(s, a) == 0 ? 1 : 0;
    any = any || mask[a];
  }
  if (!any) {
    // unreachable for generated instances (every customer is servable from a
    // fresh vehicle); a hard error beats silently producing a broken tour
    std::ostringstream os;
    os << "no feasible action: node " << s.current << ", served "
       << s.n_visited << "/" << s.inst->scale;
    throw std::runtime_error(os.str());
  }
  return mask;
}

void step(route_state& s, int action) {
  const int rule = action_violation(s, action);
  if (rule != 0) {
    std::ostringstream os;
    os << "infeasible action " << action << " (" << violation_name(rule)
       << ") at node " << s.current << ", served " << s.n_visited << "/"
       << s.inst->scale << ", clock " << s.clock << ", consumed " << s.consumed;
    throw std::runtime_error(os.str());
  }
  const problem_instance& in = *s.inst;
  if (action == 0) {
    // next route leaves the depot fresh (open variants: a new vehicle)
    s.current = 0;
    s.clock = 0.0;
    s.consumed = 0.0;
    s.load_linehaul = 1.0;
    s.load_backhaul = 1.0;
  } else {
    const double leg = in.dist(s.current, action);
    if (in.variant.time_window) {
      const double arrival = s.clock + leg;
      s.clock = std::max(arrival, in.tw_open[action]) + in.service[action];
    } else {
      s.clock += leg;
    }
    s.consumed += leg;
    if (in.pickup[action]) {
      s.load_backhaul -= in.demand[action];
    } else {
      s.load_linehaul -= in.demand[action];
      --s.linehaul_left;
    }
    s.visited[action] = 1;
    ++s.n_visited;
    s.current = action;
  }
  s.tour.push_back(action);
  s.done = s.n_visited == in.scale && (in.variant.open_route || s.current == 0);
}

std::optional<route_state> reset_with_start(const problem_instance& inst,
                                            int first_customer) {
  route_state s = reset(inst);
  if (action_violation(s, first_customer) != 0) return std::nullopt;
  step(s, first_customer);
  return s;
}

double solution_cost(const problem_instance& inst,
                     const std::vector<int>& tour) {
  const bool open = inst.variant.open_route;
  double c = 0.0;
  for (std::size_t t = 1; t < tour.size(); ++t) {
    if (open && tour[t] == 0) continue;  // no return legs on open routes
    c += inst.dist(tour[t - 1], tour[t]);
  }
  return c;
}

validation_result validate_solution(const problem_instance& inst,
                                    const std::vector<int>& tour) {
  validation_result r;
  if (tour.empty() || tour[0] != 0) {
    r.reason = "tour must start at the depot";
    return r;
  }
  route_state s = reset(inst);
  for (std::size_t t = 1; t < tour.size(); ++t) {
    if (s.done) {
      r.reason = "actions continue after completion (step " +
                 std::to_string(t) + ")";
      return r;
    }
    const int rule = action_violation(s, tour[t]);
    if (rule != 0) {
      r.reason = "step " + std::to_string(t) + ": action " +
                 std::to_string(tour[t]) + " violates " + violation_name(rule);
      return r;
    }
    step(s, tour[t]);
  }
  if (!s.done) {
    r.reason = "tour incomplete (" + std::to_string(s.n_visited) + "/" +
               std::to_string(inst.scale) + " customers served)";
    return r;
  }
  r.feasible = true;
  r.objective = solution_cost(inst, tour);
  return r;
}

std::array<problem_instance, 8> augment8(const problem_instance& inst) {
  std::array<problem_instance, 8> out;
  for (int k = 0; k < 8; ++k) {
    out[k] = inst;
    for (auto& p : out[k].coords) {
      const double x = p[0], y = p[1];
      switch (k) {
        case 0: break;
        case 1: p = {y, x}; break;
        case 2: p = {x, 1.0 - y}; break;
        case 3: p = {y, 1.0 - x}; break;
        case 4: p = {1.0 - x, y}; break;
        case 5: p = {1.0 - y, x}; break;
        case 6: p = {1.0 - x, 1.0 - y}; break;
        case 7: p = {1.0 - y, 1.0 - x}; break;
      }
    }
  }
  return out;
}

}  // namespace vrplab
