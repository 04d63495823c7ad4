#include "vrplab/refsolve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrplab {
namespace {

constexpr double kImprove = 1e-12;

double edge_cost(const problem_instance& in, int a, int b) {
  if (b == 0 && in.variant.open_route) return 0.0;
  return in.dist(a, b);
}

// ---- heuristic ----

using routes_t = std::vector<std::vector<int>>;

std::vector<int> flatten(const problem_instance& in, const routes_t& routes) {
  std::vector<int> flat{0};
  for (const auto& r : routes) {
    flat.insert(flat.end(), r.begin(), r.end());
    flat.push_back(0);
  }
  if (in.variant.open_route && flat.size() > 1) flat.pop_back();
  return flat;
}

double route_cost(const problem_instance& in, const std::vector<int>& r) {
  if (r.empty()) return 0.0;
  double c = in.dist(0, r[0]);
  for (std::size_t i = 1; i < r.size(); ++i) c += in.dist(r[i - 1], r[i]);
  c += edge_cost(in, r.back(), 0);
  return c;
}

// replays a flat prefix; true when every step is feasible (completeness not
// required) — the authoritative check for backhaul variants, where pickup
// ordering couples routes
bool partial_feasible(const problem_instance& in,
                      const std::vector<int>& flat) {
  route_state s = reset(in);
  for (std::size_t t = 1; t < flat.size(); ++t) {
    if (s.done || action_violation(s, flat[t]) != 0) return false;
    step(s, flat[t]);
  }
  return true;
}

// single-route check against a synthetic state where every other customer is
// already served; exact for all coupling-free rules (capacity, windows,
// distance limit, intra-route order)
bool route_feasible(const problem_instance& in, const std::vector<int>& r) {
  route_state s = reset(in);
  for (int c = 1; c < in.n_nodes(); ++c) {
    if (std::find(r.begin(), r.end(), c) != r.end()) continue;
    s.visited[c] = 1;
    ++s.n_visited;
    if (!in.pickup[c]) --s.linehaul_left;
  }
  for (int c : r) {
    if (action_violation(s, c) != 0) return false;
    step(s, c);
  }
  return in.variant.open_route || s.done || action_violation(s, 0) == 0;
}

bool candidate_ok(const problem_instance& in, const routes_t& routes,
                  const std::vector<int>& changed_route) {
  if (in.variant.backhaul) return partial_feasible(in, flatten(in, routes));
  return route_feasible(in, changed_route);
}

routes_t construct(const problem_instance& in) {
  routes_t routes;
  std::vector<int> linehauls, pickups;
  for (int c = 1; c < in.n_nodes(); ++c)
    (in.pickup[c] ? pickups : linehauls).push_back(c);

  for (auto* phase : {&linehauls, &pickups}) {
    std::vector<int>& pending = *phase;
    while (!pending.empty()) {
      double best_delta = 0.0;
      int best_c = -1, best_r = -1, best_pos = -1;
      bool found = false;
      for (int c : pending) {
        for (std::size_t r = 0; r < routes.size(); ++r) {
          const double old_cost = route_cost(in, routes[r]);
          for (std::size_t pos = 0; pos <= routes[r].size(); ++pos) {
            routes_t cand = routes;
            cand[r].insert(cand[r].begin() + pos, c);
            if (!candidate_ok(in, cand, cand[r])) continue;
            const double delta = route_cost(in, cand[r]) - old_cost;
            if (!found || delta < best_delta - kImprove) {
              found = true;
              best_delta = delta;
              best_c = c;
              best_r = static_cast<int>(r);
              best_pos = static_cast<int>(pos);
            }
          }
        }
        // fresh route appended at the end (always feasible for generated
        // instances: one round trip per customer is guaranteed to fit)
        routes_t cand = routes;
        cand.push_back({c});
        if (candidate_ok(in, cand, cand.back())) {
          const double delta = route_cost(in, cand.back());
          if (!found || delta < best_delta - kImprove) {
            found = true;
            best_delta = delta;
            best_c = c;
            best_r = static_cast<int>(routes.size());
            best_pos = 0;
          }
        }
      }
      if (!found)
        throw std::runtime_error("heuristic: no feasible insertion found");
      if (best_r == static_cast<int>(routes.size()))
        routes.push_back({best_c});
      else
        routes[best_r].insert(routes[best_r].begin() + best_pos, best_c);
      pending.erase(std::find(pending.begin(), pending.end(), best_c));
    }
  }
  return routes;
}

double total_cost(const problem_instance& in, const routes_t& routes) {
  double c = 0.0;
  for (const auto& r : routes) c += route_cost(in, r);
  return c;
}

bool routes_ok(const problem_instance& in, const routes_t& cand) {
  // backhaul precedence couples routes; everything else splits per route.
  // re-checking unchanged routes is wasted work, but routes are short enough
  // that keeping this simple wins
  if (in.variant.backhaul) return partial_feasible(in, flatten(in, cand));
  for (const auto& rt : cand)
    if (!route_feasible(in, rt)) return false;
  return true;
}

// first-improvement or-opt: move a segment of 1..3 customers (optionally
// reversed) anywhere, including a fresh route
bool relocate_pass(const problem_instance& in, routes_t& routes) {
  const double base = total_cost(in, routes);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    for (std::size_t len = 1; len <= 3 && len <= routes[r].size(); ++len) {
      for (std::size_t i = 0; i + len <= routes[r].size(); ++i) {
        for (std::size_t r2 = 0; r2 <= routes.size(); ++r2) {
          const std::size_t limit =
              r2 < routes.size() ? routes[r2].size() + 1 : 1;
          for (std::size_t k = 0; k < limit; ++k) {
            // same spot (or a position erased with the segment): no-op
            if (r2 == r && k >= i && k <= i + len) continue;
            const int n_orient = len > 1 ? 2 : 1;
            for (int rev = 0; rev < n_orient; ++rev) {
              routes_t cand = routes;
              std::vector<int> seg(cand[r].begin() + i,
                                   cand[r].begin() + i + len);
              if (rev) std::reverse(seg.begin(), seg.end());
              cand[r].erase(cand[r].begin() + i, cand[r].begin() + i + len);
              if (r2 < cand.size()) {
                std::size_t kk = r2 == r && k > i ? k - len : k;
                cand[r2].insert(cand[r2].begin() + kk, seg.begin(), seg.end());
              } else {
                cand.push_back(seg);
              }
              cand.erase(std::remove_if(cand.begin(), cand.end(),
                                        [](const auto& x) { return x.empty(); }),
                         cand.end());
              if (!routes_ok(in, cand)) continue;
              if (total_cost(in, cand) < base - kImprove) {
                routes = std::move(cand);
                return true;
              }
            }
          }
        }
      }
    }
  }
  return false;
}

// first-improvement exchange of two customers across (or within) routes
bool swap_pass(const problem_instance& in, routes_t& routes) {
  const double base = total_cost(in, routes);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    for (std::size_t i = 0; i < routes[r].size(); ++i) {
      for (std::size_t r2 = r; r2 < routes.size(); ++r2) {
        for (std::size_t j = r2 == r ? i + 1 : 0; j < routes[r2].size(); ++j) {
          routes_t cand = routes;
          std::swap(cand[r][i], cand[r2][j]);
          if (!routes_ok(in, cand)) continue;
          if (total_cost(in, cand) < base - kImprove) {
            routes = std::move(cand);
            return true;
          }
        }
      }
    }
  }
  return false;
}

// intra-route segment reversal
bool two_opt_pass(const problem_instance& in, routes_t& routes) {
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const std::size_t len = routes[r].size();
    for (std::size_t i = 0; i + 1 < len; ++i) {
      for (std::size_t j = i + 1; j < len; ++j) {
        routes_t cand = routes;
        std::reverse(cand[r].begin() + i, cand[r].begin() + j + 1);
        if (!candidate_ok(in, cand, cand[r])) continue;
        if (total_cost(in, cand) < total_cost(in, routes) - kImprove) {
          routes = std::move(cand);
          return true;
        }
      }
    }
  }
  return false;
}

// ---- exact ----

struct bb_search {
  const problem_instance& in;
  std::vector<double> lb_in;  // cheapest incoming edge per customer
  double best_obj;
  std::vector<int> best_tour;

  double lower_bound(const route_state& s) const {
    double lb = 0.0;
    double min_return = -1.0;
    for (int c = 1; c < in.n_nodes(); ++c) {
      if (s.visited[c]) continue;
      lb += lb_in[c];
      const double dr = in.dist(c, 0);
      if (min_return < 0.0 || dr < min_return) min_return = dr;
    }
    if (!in.variant.open_route) {
      if (min_return >= 0.0)
        lb += min_return;  // some unvisited customer closes the last route
      else if (s.current != 0)
        lb += in.dist(s.current, 0);
    }
    return lb;
  }

  void dfs(const route_state& s, double cost) {
    if (s.done) {
      if (cost < best_obj - kImprove) {
        best_obj = cost;
        best_tour = s.tour;
      }
      return;
    }
    if (cost + lower_bound(s) >= best_obj - kImprove) return;
    std::vector<std::pair<double, int>> children;
    for (int a = 0; a < in.n_nodes(); ++a)
      if (action_violation(s, a) == 0)
        children.push_back({edge_cost(in, s.current, a), a});
    std::sort(children.begin(), children.end());
    for (const auto& [ec, a] : children) {
      route_state child = s;
      step(child, a);
      dfs(child, cost + ec);
    }
  }
};

}  // namespace

ref_solution solve_heuristic(const problem_instance& inst) {
  routes_t routes = construct(inst);
  for (int pass = 0; pass < 500; ++pass) {
    const bool improved = two_opt_pass(inst, routes) ||
                          relocate_pass(inst, routes) ||
                          swap_pass(inst, routes);
    if (!improved) break;
  }
  ref_solution sol;
  sol.tour = flatten(inst, routes);
  const auto v = validate_solution(inst, sol.tour);
  if (!v.feasible)
    throw std::runtime_error("heuristic produced infeasible tour: " + v.reason);
  sol.objective = v.objective;
  return sol;
}

ref_solution solve_exact(const problem_instance& inst) {
  if (inst.scale > 10)
    throw std::invalid_argument("solve_exact: limited to 10 customers");
  const ref_solution incumbent = solve_heuristic(inst);
  bb_search bb{inst, {}, incumbent.objective, incumbent.tour};
  bb.lb_in.assign(inst.n_nodes(), 0.0);
  for (int c = 1; c < inst.n_nodes(); ++c) {
    double mn = -1.0;
    for (int j = 0; j < inst.n_nodes(); ++j) {
      if (j == c) continue;
      const double d = inst.dist(j, c);
      if (mn < 0.0 || d < mn) mn = d;
    }
    bb.lb_in[c] = mn;
  }
  bb.dfs(reset(inst), 0.0);
  ref_solution sol;
  sol.tour = bb.best_tour;
  sol.objective = bb.best_obj;
  return sol;
}

}  // namespace vrplab
