// Acceptance gate: twelve go/no-go checks covering the scaling-law fits, the
// environment semantics, the solvers, the policy gradients and the end-to-end
// training loop. One PASS/FAIL line per criterion; exit code = #failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "support/mask_oracle.hpp"
#include "support/svd_oracle.hpp"
#include "support/test_util.hpp"
#include "vrplab/eval.hpp"
#include "vrplab/grad.hpp"
#include "vrplab/refsolve.hpp"
#include "vrplab/scaling.hpp"
#include "vrplab/train.hpp"

using namespace vrplab;

namespace {

struct check_result {
  bool pass = false;
  std::string detail;
};

double now_s() {
  using clk = std::chrono::steady_clock;
  static const clk::time_point t0 = clk::now();
  return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

const power_law_fit* find_fit(const std::vector<power_law_fit>& fits,
                              const std::string& label) {
  for (const auto& f : fits)
    if (f.label == label) return &f;
  return nullptr;
}

problem_instance gen(const std::string& variant, int scale, std::uint64_t seed,
                     distribution_spec dist = distribution_spec::uniform()) {
  generator_config cfg;
  cfg.variant = variant_flags::parse(variant);
  cfg.scale = scale;
  cfg.dist = dist;
  cfg.seed = seed;
  return generate_instance(cfg);
}

model_config tiny_model() {
  model_config cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.kv_dim = 4;
  cfg.ffn_mult = 2.0;
  cfg.spectral_norm = false;
  return cfg;
}

// ---------------------------------------------------------------------------
// AC-1: model-size fits on the four published checkpoints
check_result ac1() {
  auto fits =
      fit_all(read_series_csv(testing::data_dir() + "/scaling/table5.csv"));
  const double mean = mean_exponent(fits);
  const auto* u100 = find_fit(fits, "Uniform100");
  if (!u100) return {false, "Uniform100 series missing"};
  const bool mean_ok = mean >= 0.060 && mean <= 0.072;
  const bool a_ok = std::abs(u100->exponent - 0.057) <= 0.003;
  const bool r2_ok = u100->r_squared >= 0.97;
  std::ostringstream d;
  d << "mean a_N " << fmt(mean) << (mean_ok ? " in" : " OUTSIDE")
    << " [0.060,0.072]; Uniform100 a " << fmt(u100->exponent)
    << (a_ok ? " within" : " OUTSIDE") << " 0.057+/-0.003, R^2 "
    << fmt(u100->r_squared) << (r2_ok ? " >= 0.97" : " < 0.97");
  return {mean_ok && a_ok && r2_ok, d.str()};
}

// AC-2: trajectory-count exponents for the largest model
check_result ac2() {
  const std::string base = testing::data_dir() + "/scaling";
  auto t6 = fit_all(read_series_csv(base + "/table6_traj.csv"));
  auto t8 = fit_all(read_series_csv(base + "/table8_traj.csv"));
  const auto* f6 = find_fit(t6, "1B");
  const auto* f8 = find_fit(t8, "1B");
  if (!f6 || !f8) return {false, "1B series missing"};
  const double halving = std::pow(2.0, -f8->exponent);
  const bool a_ok = f6->exponent >= 0.095 && f6->exponent <= 0.12;
  const bool h_ok = halving >= 0.95 && halving <= 0.97;
  std::ostringstream d;
  d << "n=50 a_T " << fmt(f6->exponent) << (a_ok ? " in" : " OUTSIDE")
    << " [0.095,0.12]; n=200 2^-a_T " << fmt(halving)
    << (h_ok ? " in" : " OUTSIDE") << " [0.95,0.97]";
  return {a_ok && h_ok, d.str()};
}

// AC-3: compute exponents pooled over every (model, aug) series
check_result ac3() {
  const std::string base = testing::data_dir() + "/scaling";
  std::vector<power_law_fit> fits;
  for (const char* f :
       {"/table6_gflops.csv", "/table7_gflops.csv", "/table8_gflops.csv"}) {
    auto part = fit_all(read_series_csv(base + f));
    fits.insert(fits.end(), part.begin(), part.end());
  }
  const double mean = mean_exponent(fits);
  const bool ok = mean >= 0.095 && mean <= 0.117 && fits.size() == 24;
  std::ostringstream d;
  d << "mean a_C over " << fits.size() << " series " << fmt(mean)
    << (ok ? " in" : " OUTSIDE") << " [0.095,0.117]";
  return {ok, d.str()};
}

// AC-4: batch-size schedule
check_result ac4() {
  for (int n = 1; n <= 125; ++n)
    if (batch_size_for_scale(n) != 64)
      return {false, "n=" + std::to_string(n) + " gave " +
                         std::to_string(batch_size_for_scale(n))};
  for (int n = 126; n <= 200; ++n) {
    const int want =
        static_cast<int>(std::floor(20.0 * std::pow(200.0 / n, 2.5)));
    if (batch_size_for_scale(n) != want)
      return {false, "n=" + std::to_string(n) + " gave " +
                         std::to_string(batch_size_for_scale(n)) +
                         ", formula says " + std::to_string(want)};
  }
  const bool spots = batch_size_for_scale(126) == 63 &&
                     batch_size_for_scale(150) == 41 &&
                     batch_size_for_scale(175) == 27 &&
                     batch_size_for_scale(200) == 20;
  return {spots, "64 for n<=125; 126->63 150->41 175->27 200->20"};
}

// AC-5: feasibility masks agree with a brute-force replay oracle
check_result ac5() {
  long instances = 0, steps = 0, mismatches = 0;
  for (const auto& v : all_variants()) {
    for (int rep = 0; rep < 200; ++rep) {
      const int scale = 3 + rep % 6;
      distribution_spec dist = distribution_spec::uniform();
      if (rep % 3 == 1) dist = distribution_spec::gaussian(3, 10);
      if (rep % 3 == 2) dist = distribution_spec::mutated(
          static_cast<mutation_op>(rep % 6));
      auto inst = gen(v.name(), scale, 9000 + rep, dist);
      ++instances;
      rng g(rng::derive(77, instances));
      route_state s = reset(inst);
      while (!s.done) {
        auto mask = feasible_actions(s);
        ++steps;
        for (int a = 0; a < inst.n_nodes(); ++a) {
          const bool env_ok = mask[a] != 0;
          const bool oracle_ok = testing::oracle_feasible(inst, s.tour, a);
          if (env_ok != oracle_ok && ++mismatches <= 3)
            std::fprintf(stderr, "  mismatch: %s action %d env=%d oracle=%d\n",
                         v.name().c_str(), a, int(env_ok), int(oracle_ok));
        }
        std::vector<int> feas;
        for (int a = 0; a < inst.n_nodes(); ++a)
          if (mask[a]) feas.push_back(a);
        step(s, feas[g.uniform_int(feas.size())]);
      }
    }
  }
  std::ostringstream d;
  d << instances << " instances, " << steps << " decision points, "
    << mismatches << " mismatches";
  return {instances == 3200 && mismatches == 0, d.str()};
}

// AC-6: solver ordering exact <= heuristic <= policy rollout
check_result ac6() {
  policy_params p = init_params(tiny_model(), 5);
  int violations = 0, infeasible = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto& v = all_variants()[i % 16];
    auto inst = gen(v.name(), 3 + i % 6, 40000 + i);
    auto ex = solve_exact(inst);
    auto h = solve_heuristic(inst);
    policy_context ctx = make_context(p, inst);
    auto roll = rollout(p, ctx, inst, 0, decode_mode::greedy, nullptr);
    if (!roll) {
      ++infeasible;
      continue;
    }
    for (const auto& tour : {ex.tour, h.tour, roll->tour})
      if (!validate_solution(inst, tour).feasible) ++infeasible;
    if (ex.objective > h.objective + 1e-9 ||
        h.objective > roll->objective + 1e-9)
      ++violations;
    worst = std::max(worst, ex.objective - h.objective);
    worst = std::max(worst, h.objective - roll->objective);
  }
  std::ostringstream d;
  d << "500 instances, " << violations << " ordering violations, "
    << infeasible << " infeasible tours (max excess " << fmt(worst, 3) << ")";
  return {violations == 0 && infeasible == 0, d.str()};
}

// AC-7: symmetry invariance and augmentation dominance
check_result ac7() {
  policy_params p = init_params(tiny_model(), 6);
  int cost_breaks = 0, aug_breaks = 0;
  for (int i = 0; i < 100; ++i) {
    const auto& v = all_variants()[i % 16];
    auto inst = gen(v.name(), 5 + i % 16, 60000 + i);
    auto tour = solve_heuristic(inst).tour;
    const double base_cost = solution_cost(inst, tour);
    auto views = augment8(inst);
    for (const auto& view : views)
      if (std::abs(solution_cost(view, tour) - base_cost) > 1e-9) ++cost_breaks;

    const int m = std::min(3, inst.scale);
    auto best_over = [&](const problem_instance& target) {
      policy_context ctx = make_context(p, target);
      double best = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= m; ++k) {
        auto r = rollout(p, ctx, target, k, decode_mode::greedy, nullptr);
        if (r) best = std::min(best, solution_cost(inst, r->tour));
      }
      return best;
    };
    const double plain = best_over(inst);
    double augd = std::numeric_limits<double>::infinity();
    for (const auto& view : views) augd = std::min(augd, best_over(view));
    if (augd > plain + 1e-12) ++aug_breaks;
  }
  std::ostringstream d;
  d << "100 instances x 8 views: " << cost_breaks
    << " objective deviations > 1e-9, " << aug_breaks
    << " augmented-best regressions";
  return {cost_breaks == 0 && aug_breaks == 0, d.str()};
}

// AC-8: REINFORCE-loss gradients vs central differences
check_result ac8() {
  model_config cfg = tiny_model();  // one layer, d_h = 8
  long checked = 0, ok = 0;
  double worst = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    auto inst = gen("CVRP", 6, 70000 + seed);
    policy_params p = init_params(cfg, 1000 + seed);
    policy_context ctx = make_context(p, inst);

    std::vector<std::vector<int>> tours;
    std::vector<double> objectives, logprobs;
    for (int k = 1; k <= 4; ++k) {
      rng s(seed * 10 + k);
      auto r = rollout(p, ctx, inst, k, decode_mode::sample, &s);
      if (!r) return {false, "forced start infeasible on CVRP"};
      tours.push_back(r->tour);
      objectives.push_back(r->objective);
      logprobs.push_back(r->logprob);
    }
    auto terms = reinforce_loss(objectives, logprobs);
    std::vector<double> w(4);
    for (int k = 0; k < 4; ++k) w[k] = terms.advantages[k] / 4.0;

    policy_params grads = zeros_like(p);
    backward_rollouts(p, inst, tours, w, true, grads);

    auto loss = [&]() {
      double l = 0.0;
      for (int k = 0; k < 4; ++k)
        l += w[k] * tour_logprob(p, inst, tours[k], true);
      return l;
    };
    auto pt = tensors(p);
    auto gt = tensors(grads);
    const double h = 1e-4;
    for (std::size_t t = 0; t < pt.size(); ++t) {
      for (std::size_t j = 0; j < pt[t].m->v.size(); ++j) {
        double& theta = pt[t].m->v[j];
        const double orig = theta;
        theta = orig + h;
        const double up = loss();
        theta = orig - h;
        const double down = loss();
        theta = orig;
        const double fd = (up - down) / (2.0 * h);
        const double an = gt[t].m->v[j];
        const double rel =
            std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
        ++checked;
        if (rel < 1e-3) ++ok;
        else worst = std::max(worst, rel);
      }
    }
  }
  const double frac = double(ok) / double(checked);
  std::ostringstream d;
  d << checked << " params over 20 seeds, " << fmt(100.0 * frac, 4)
    << "% within rel 1e-3 (worst rel " << fmt(worst, 3) << ")";
  return {frac >= 0.95, d.str()};
}

// AC-9: spectral normalization lands on sigma 1 (dense SVD oracle)
check_result ac9() {
  double lo = 1e9, hi = 0.0;
  int n_linear = 0;
  for (int dh : {32, 64}) {
    model_config cfg;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.kv_dim = dh / 4;
    cfg.ffn_mult = 8.0 / 3.0;
    cfg.spectral_norm = true;
    policy_params p = init_params(cfg, 90 + dh);
    spectral_normalize(p, 30);
    for (const auto& t : tensors(p)) {
      if (!t.is_linear) continue;
      const double sigma = testing::svd_sigma_max(*t.m);
      lo = std::min(lo, sigma);
      hi = std::max(hi, sigma);
      ++n_linear;
    }
  }
  std::ostringstream d;
  d << n_linear << " linear weights, sigma in [" << fmt(lo, 8) << ", "
    << fmt(hi, 8) << "]";
  return {lo >= 0.999 && hi <= 1.001, d.str()};
}

// AC-10: training improves greedy multi-start CVRP-10 by >= 30% gap drop
check_result ac10() {
  model_config cfg;
  cfg.layers = 1;
  cfg.heads = 8;
  cfg.kv_dim = 8;  // d_h = 64
  cfg.ffn_mult = 8.0 / 3.0;
  cfg.spectral_norm = true;

  generator_config gc;
  gc.variant = variant_flags::parse("CVRP");
  gc.scale = 10;
  gc.dist = distribution_spec::uniform();
  gc.seed = 777;
  auto val_set = generate_dataset(gc, 100);
  std::vector<double> refs;
  for (const auto& inst : val_set) refs.push_back(solve_exact(inst).objective);

  auto score = [&](const policy_params& p) {
    double obj_sum = 0.0, gap_sum = 0.0;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
      policy_context ctx = make_context(p, val_set[i]);
      double best = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= val_set[i].scale; ++k) {
        auto r = rollout(p, ctx, val_set[i], k, decode_mode::greedy, nullptr);
        if (r) best = std::min(best, r->objective);
      }
      obj_sum += best;
      gap_sum += (best - refs[i]) / refs[i] * 100.0;
    }
    return std::pair<double, double>{obj_sum / val_set.size(),
                                     gap_sum / val_set.size()};
  };

  train_config tc;
  tc.model = cfg;
  tc.epochs = 1;
  tc.steps_per_epoch = 2000;
  tc.scales = {10};
  tc.seed = 4242;

  policy_params untrained = init_params(cfg, tc.seed);
  spectral_normalize(untrained, 30);
  auto [obj0, gap0] = score(untrained);

  auto trained = train(tc, nullptr);
  auto [obj1, gap1] = score(trained.params);

  const bool decreased = obj1 < obj0;
  const double rel_drop = (gap0 - gap1) / gap0;
  std::ostringstream d;
  d << "greedy multi-start mean objective " << fmt(obj0, 5) << " -> "
    << fmt(obj1, 5) << "; mean gap " << fmt(gap0, 4) << "% -> " << fmt(gap1, 4)
    << "% (" << fmt(100.0 * rel_drop, 3) << "% relative drop)";
  return {decreased && rel_drop >= 0.30, d.str()};
}

// AC-11: generator statistics
check_result ac11() {
  std::ostringstream d;
  if (vehicle_capacity(100) != 50)
    return {false, "vehicle_capacity(100) = " +
                       std::to_string(vehicle_capacity(100))};
  if (kTimeHorizon != 4.6) return {false, "horizon " + fmt(kTimeHorizon)};

  const int n = 10000, scale = 20;
  int tw_bad = 0, rho_bad = 0;
  long pickups = 0, customers = 0;
  for (int i = 0; i < n; ++i) {
    auto tw = gen("VRPTW", scale, 100000 + i);
    for (int c = 1; c <= scale; ++c) {
      const double width = tw.tw_close[c] - tw.tw_open[c];
      const double s = tw.service[c];
      if (width < 0.18 - 1e-9 || width > 0.20 + 1e-9) ++tw_bad;
      if (s < 0.15 - 1e-9 || s > 0.18 + 1e-9) ++tw_bad;
    }
    auto dl = gen("VRPL", scale, 200000 + i);
    if (dl.route_limit < 2.0 * dl.max_depot_dist() - 1e-9 ||
        dl.route_limit > 3.0 + 1e-9)
      ++rho_bad;
    auto bh = gen("VRPB", scale, 300000 + i);
    for (int c = 1; c <= scale; ++c) {
      pickups += bh.pickup[c];
      ++customers;
    }
  }
  const double freq = double(pickups) / double(customers);
  d << "capacity(100)=50, horizon 4.6, " << tw_bad << " window violations, "
    << rho_bad << " route-limit violations, pickup freq " << fmt(freq, 4);
  const bool ok = tw_bad == 0 && rho_bad == 0 && std::abs(freq - 0.2) < 0.01;
  return {ok, d.str()};
}

// AC-12: compute model sanity
check_result ac12() {
  const std::map<std::string, double> targets{
      {"1M", 1.3e6}, {"5M", 5.0e6}, {"40M", 3.89e7}, {"1B", 1.1e9}};
  double worst_dev = 0.0;
  for (const auto& [name, want] : targets) {
    const double got =
        static_cast<double>(param_count(preset_config(name)));
    worst_dev = std::max(worst_dev, std::abs(got - want) / want);
  }
  const bool params_ok = worst_dev <= 0.20;

  bool aug_ok = true, mono_ok = true;
  for (const char* name : {"1M", "5M"}) {
    model_config cfg = preset_config(name);
    for (int scale : {20, 50}) {
      const double base = flops_estimate(cfg, scale, 10, false);
      if (flops_estimate(cfg, scale, 10, true) != 8.0 * base) aug_ok = false;
      if (flops_estimate(cfg, scale, 20, false) <= base) mono_ok = false;
      if (flops_estimate(cfg, scale + 30, 10, false) <= base) mono_ok = false;
    }
    model_config deeper = cfg;
    deeper.layers += 4;
    model_config wider = cfg;
    wider.kv_dim *= 2;
    if (flops_estimate(deeper, 50, 10, false) <=
        flops_estimate(cfg, 50, 10, false))
      mono_ok = false;
    if (flops_estimate(wider, 50, 10, false) <=
        flops_estimate(cfg, 50, 10, false))
      mono_ok = false;
  }
  std::ostringstream d;
  d << "presets within " << fmt(100.0 * worst_dev, 3)
    << "% of target sizes; aug x8 " << (aug_ok ? "exact" : "BROKEN")
    << "; monotonicity " << (mono_ok ? "holds" : "BROKEN");
  return {params_ok && aug_ok && mono_ok, d.str()};
}

}  // namespace

int main() {
  struct criterion {
    const char* name;
    std::function<check_result()> fn;
  };
  const std::vector<criterion> gate{
      {"model-size scaling fits", ac1},
      {"trajectory scaling fits", ac2},
      {"compute scaling fits", ac3},
      {"batch-size schedule", ac4},
      {"mask/oracle equivalence", ac5},
      {"solver ordering", ac6},
      {"symmetry augmentation", ac7},
      {"gradient check", ac8},
      {"spectral normalization", ac9},
      {"training improves CVRP-10", ac10},
      {"generator statistics", ac11},
      {"parameter and flops accounting", ac12},
  };

  int failures = 0;
  for (std::size_t i = 0; i < gate.size(); ++i) {
    const double t0 = now_s();
    check_result r;
    try {
      r = gate[i].fn();
    } catch (const std::exception& ex) {
      r = {false, std::string("exception: ") + ex.what()};
    }
    const double dt = now_s() - t0;
    std::printf("%s AC-%zu: %s (%s) [%.2fs]\n", r.pass ? "PASS" : "FAIL",
                i + 1, gate[i].name, r.detail.c_str(), dt);
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures;
}
