#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "vrplab/train.hpp"

using namespace vrplab;

namespace {

model_config tiny() {
  model_config cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.kv_dim = 4;
  cfg.ffn_mult = 2.0;
  cfg.spectral_norm = false;
  return cfg;
}

double l2(const policy_params& g) {
  double s = 0.0;
  for (const auto& t : tensors(g))
    for (double x : t.m->v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("batch size schedule") {
  for (int n : {1, 10, 50, 100, 124, 125}) CHECK(batch_size_for_scale(n) == 64);
  CHECK(batch_size_for_scale(126) == 63);
  CHECK(batch_size_for_scale(150) == 41);
  CHECK(batch_size_for_scale(175) == 27);
  CHECK(batch_size_for_scale(200) == 20);
  // floor(20 * (200/n)^2.5) for the in-between scales, and never zero
  for (int n = 126; n <= 200; ++n) {
    const int want =
        static_cast<int>(std::floor(20.0 * std::pow(200.0 / n, 2.5)));
    CHECK(batch_size_for_scale(n) == want);
    CHECK(batch_size_for_scale(n) >= 20);
  }
  for (int n = 126; n < 200; ++n)
    CHECK(batch_size_for_scale(n) >= batch_size_for_scale(n + 1));
}

TEST_CASE("reinforce_loss: baseline, advantages, invariances") {
  const std::vector<double> obj{1.0, 2.0, 3.0};
  const std::vector<double> lp{-1.0, -2.0, -3.0};
  auto t = reinforce_loss(obj, lp);
  // baseline 2 -> advantages {-1, 0, 1}; loss = ((-1)(-1) + 0 + (1)(-3)) / 3
  CHECK(t.advantages[0] == doctest::Approx(-1.0));
  CHECK(t.advantages[1] == doctest::Approx(0.0));
  CHECK(t.advantages[2] == doctest::Approx(1.0));
  CHECK(t.loss == doctest::Approx(-2.0 / 3.0));

  double sum = 0.0;
  for (double a : t.advantages) sum += a;
  CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));

  // shifting every objective by a constant changes nothing
  std::vector<double> shifted{11.0, 12.0, 13.0};
  auto t2 = reinforce_loss(shifted, lp);
  CHECK(t2.loss == doctest::Approx(t.loss).epsilon(1e-12));
  for (int k = 0; k < 3; ++k)
    CHECK(t2.advantages[k] == doctest::Approx(t.advantages[k]).epsilon(1e-12));

  CHECK_THROWS_AS(reinforce_loss({1.0}, {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(reinforce_loss({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(reinforce_loss({1.0, 2.0}, {-1.0}), std::invalid_argument);
}

TEST_CASE("clip_gradients rescales to the max norm and reports pre-clip") {
  policy_params g = init_params(tiny(), 5);
  const double before = l2(g);
  REQUIRE(before > 1.0);

  policy_params small = g;
  for (auto& t : tensors(small))
    for (double& x : t.m->v) x *= 0.5 / before;
  const double small_norm = l2(small);
  policy_params small_copy = small;
  CHECK(clip_gradients(small, 1.0) == doctest::Approx(small_norm));
  // under the limit: untouched
  auto st = tensors(small), sc = tensors(small_copy);
  for (std::size_t i = 0; i < st.size(); ++i)
    CHECK(st[i].m->v == sc[i].m->v);

  CHECK(clip_gradients(g, 1.0) == doctest::Approx(before));
  CHECK(l2(g) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("adam_step: first-step update and decoupled decay") {
  model_config cfg = tiny();
  policy_params p = init_params(cfg, 6);
  policy_params g = zeros_like(p);
  auto pt = tensors(p);
  auto gt = tensors(g);
  const double theta0 = pt[0].m->v[0];
  const double theta1 = pt[0].m->v[1];
  gt[0].m->v[0] = 0.5;

  adam_state st;
  const double lr = 1e-3, wd = 0.1, eps = 1e-8;
  adam_step(p, g, st, lr, wd);
  CHECK(st.t == 1);

  // bias-corrected first step: m_hat = g, v_hat = g^2
  const double expect =
      theta0 - lr * (0.5 / (std::sqrt(0.25) + eps) + wd * theta0);
  CHECK(pt[0].m->v[0] == doctest::Approx(expect).epsilon(1e-9));
  // zero gradient still decays the weight (decoupled wd)
  CHECK(pt[0].m->v[1] == doctest::Approx(theta1 * (1.0 - lr * wd)));

  // lr = 0 freezes everything
  policy_params q = init_params(cfg, 7);
  auto qt = tensors(q);
  const std::vector<double> before = qt[0].m->v;
  adam_state st2;
  adam_step(q, g, st2, 0.0, wd);
  CHECK(qt[0].m->v == before);
}

TEST_CASE("train: deterministic, logs every step, objective is sane") {
  train_config cfg;
  cfg.model = tiny();
  cfg.epochs = 2;
  cfg.steps_per_epoch = 2;
  cfg.scales = {6};
  cfg.max_starts = 3;
  cfg.seed = 99;

  std::ostringstream csv_a, csv_b;
  auto a = train(cfg, &csv_a);
  auto b = train(cfg, &csv_b);

  REQUIRE(a.log.size() == 4);
  CHECK(a.log.front().epoch == 1);
  CHECK(a.log.back().epoch == 2);
  CHECK(a.log.back().step == 4);
  for (const auto& m : a.log) {
    CHECK(std::isfinite(m.loss));
    CHECK(m.mean_obj > 0.0);
    CHECK(m.grad_norm_preclip > 0.0);
  }

  // same seed, same run: identical metrics and identical weights
  CHECK(csv_a.str() == csv_b.str());
  auto ta = tensors(a.params), tb = tensors(b.params);
  for (std::size_t i = 0; i < ta.size(); ++i)
    CHECK(ta[i].m->v == tb[i].m->v);

  const std::string head = csv_a.str().substr(0, csv_a.str().find('\n'));
  CHECK(head == kMetricsCsvHeader);
  CHECK(csv_a.str().ends_with("\n"));

  cfg.seed = 100;
  std::ostringstream csv_c;
  auto c = train(cfg, &csv_c);
  CHECK(csv_c.str() != csv_a.str());

  // weights actually moved
  policy_params fresh = init_params(cfg.model, cfg.seed);
  auto tf = tensors(fresh), tc = tensors(c.params);
  bool moved = false;
  for (std::size_t i = 0; i < tf.size() && !moved; ++i)
    moved = tf[i].m->v != tc[i].m->v;
  CHECK(moved);
}

TEST_CASE("train cycles the variant and distribution lists") {
  train_config cfg;
  cfg.model = tiny();
  cfg.steps_per_epoch = 2;
  cfg.scales = {5, 7};
  cfg.variants = {variant_flags::parse("CVRP"), variant_flags::parse("OVRP")};
  cfg.distributions = {distribution_spec::uniform(),
                       distribution_spec::parse("gm3x10")};
  cfg.max_starts = 2;
  cfg.seed = 7;
  std::ostringstream csv;
  auto r = train(cfg, &csv);
  CHECK(r.log.size() == 2);
  for (const auto& m : r.log) CHECK(std::isfinite(m.loss));
}
