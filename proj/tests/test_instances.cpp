#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "support/test_util.hpp"
#include "vrplab/instance.hpp"
#include "vrplab/rng.hpp"

using namespace vrplab;

namespace {

problem_instance make(const std::string& variant, int scale,
                      const std::string& dist, std::uint64_t seed) {
  generator_config cfg;
  cfg.variant = variant_flags::parse(variant);
  cfg.scale = scale;
  cfg.dist = distribution_spec::parse(dist);
  cfg.seed = seed;
  return generate_instance(cfg);
}

}  // namespace

TEST_CASE("capacity schedule") {
  CHECK(vehicle_capacity(10) == 32);
  CHECK(vehicle_capacity(50) == 40);
  CHECK(vehicle_capacity(90) == 48);
  CHECK(vehicle_capacity(100) == 50);
  CHECK(vehicle_capacity(200) == 70);
}

TEST_CASE("variant naming round-trips all 16") {
  const auto& all = all_variants();
  REQUIRE(all.size() == 16);
  CHECK(all.front().name() == "CVRP");
  CHECK(all.back().name() == "OVRPBLTW");
  std::set<std::string> names;
  for (const auto& v : all) {
    names.insert(v.name());
    CHECK(variant_flags::parse(v.name()) == v);
  }
  CHECK(names.size() == 16);
  CHECK(names.count("VRPTW") == 1);
  CHECK(names.count("OVRPB") == 1);
  CHECK_THROWS(variant_flags::parse("XVRP"));
}

TEST_CASE("uniform coordinates live in the unit square, deterministically") {
  auto a = make("CVRP", 80, "uniform", 9);
  auto b = make("CVRP", 80, "uniform", 9);
  auto c = make("CVRP", 80, "uniform", 10);
  CHECK(instance_hash(a) == instance_hash(b));
  CHECK(instance_hash(a) != instance_hash(c));
  REQUIRE(a.coords.size() == 81);
  for (const auto& p : a.coords) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] < 1.0);
    CHECK(p[1] >= 0.0);
    CHECK(p[1] < 1.0);
  }
}

TEST_CASE("gaussian mixture: even cluster split, min-max onto [0,1]") {
  rng g(3);
  auto pts = gen_coords_gaussian_mixture(90, 3, 10, g);
  REQUIRE(pts.size() == 91);
  // per-axis min-max normalization touches both ends
  for (int axis : {0, 1}) {
    double lo = 1e9, hi = -1e9;
    for (const auto& p : pts) {
      lo = std::min(lo, p[axis]);
      hi = std::max(hi, p[axis]);
    }
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
  }
  // customers 1..m are the cluster centers; 87 remaining split 29/29/29.
  // Verify by nearest-center assignment: each center should collect roughly
  // its share (the normal spread can leak a few points to a nearer center).
  std::array<int, 3> near{};
  for (std::size_t i = 4; i < pts.size(); ++i) {
    double best = 1e18;
    int arg = 0;
    for (int m = 0; m < 3; ++m) {
      const double dx = pts[i][0] - pts[m + 1][0];
      const double dy = pts[i][1] - pts[m + 1][1];
      if (dx * dx + dy * dy < best) {
        best = dx * dx + dy * dy;
        arg = m;
      }
    }
    ++near[arg];
  }
  for (int m = 0; m < 3; ++m) CHECK(near[m] > 10);
}

TEST_CASE("demand support is {1..9}/C and the depot is zero") {
  auto inst = make("CVRP", 100, "uniform", 4);
  CHECK(inst.demand[0] == 0.0);
  std::set<int> seen;
  for (int i = 1; i <= inst.scale; ++i) {
    double units = inst.demand[i] * inst.capacity;
    int u = static_cast<int>(std::lround(units));
    CHECK(std::abs(units - u) < 1e-9);
    CHECK(u >= 1);
    CHECK(u <= 9);
    seen.insert(u);
  }
  CHECK(seen.size() == 9);  // 100 draws cover all 9 values w.h.p.
}

TEST_CASE("backhaul ratio matches the fixed-count examples") {
  auto inst = make("VRPB", 50, "uniform", 5);
  std::fill(inst.pickup.begin(), inst.pickup.end(), 0);
  for (int i = 1; i <= 9; ++i) inst.pickup[i] = 1;
  CHECK(backhaul_ratio(inst) == doctest::Approx(0.18));

  auto small = make("VRPB", 40, "uniform", 5);
  std::fill(small.pickup.begin(), small.pickup.end(), 0);
  small.pickup[7] = 1;
  CHECK(backhaul_ratio(small) == doctest::Approx(0.025));
}

TEST_CASE("pickup frequency converges to 0.2 and only appears with B") {
  int picks = 0, total = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto inst = make("VRPB", 100, "uniform", 1000 + s);
    for (int i = 1; i <= inst.scale; ++i) picks += inst.pickup[i];
    total += inst.scale;
  }
  CHECK(std::abs(static_cast<double>(picks) / total - 0.2) < 0.02);

  auto plain = make("CVRP", 100, "uniform", 6);
  for (auto f : plain.pickup) CHECK(f == 0);
}

TEST_CASE("time windows obey the construction bounds") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto inst = make("VRPTW", 50, "uniform", 100 + s);
    CHECK(inst.tw_open[0] == 0.0);
    CHECK(inst.tw_close[0] == kTimeHorizon);
    CHECK(inst.service[0] == 0.0);
    for (int i = 1; i <= inst.scale; ++i) {
      const double d0 = inst.dist(0, i);
      const double width = inst.tw_close[i] - inst.tw_open[i];
      CHECK(inst.service[i] >= 0.15);
      CHECK(inst.service[i] < 0.18);
      CHECK(width >= 0.18);
      CHECK(width < 0.20);
      // reachable from the depot, and a return before the horizon fits even
      // when arriving at the latest admissible time
      CHECK(inst.tw_open[i] >= d0 - 1e-9);
      CHECK(inst.tw_close[i] + inst.service[i] + d0 <= kTimeHorizon + 1e-9);
    }
  }
  auto plain = make("CVRP", 50, "uniform", 7);
  CHECK(plain.tw_open.empty());
  CHECK(plain.tw_close.empty());
}

TEST_CASE("distance limit draws from [2 max d0j, 3]") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto inst = make("VRPL", 50, "uniform", 200 + s);
    CHECK(inst.route_limit >= 2.0 * inst.max_depot_dist() - 1e-12);
    CHECK(inst.route_limit <= 3.0);
  }
  auto plain = make("CVRP", 50, "uniform", 8);
  CHECK(plain.route_limit == 0.0);
}

TEST_CASE("raw mutation operators: geometric contracts") {
  rng g(17);
  mutations::points pts;
  for (int i = 0; i < 40; ++i)
    pts.push_back({g.uniform(), g.uniform()});

  SUBCASE("rotation by zero is the identity") {
    auto rotated = pts;
    mutations::rotate(rotated, {0.3, 0.7}, 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(rotated[i][0] == doctest::Approx(pts[i][0]).epsilon(1e-15));
      CHECK(rotated[i][1] == doctest::Approx(pts[i][1]).epsilon(1e-15));
    }
  }

  SUBCASE("rotation preserves pairwise distances") {
    auto rotated = pts;
    mutations::rotate(rotated, {0.5, 0.5}, 1.234);
    auto d = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
      return std::hypot(a[0] - b[0], a[1] - b[1]);
    };
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); j += 7)
        CHECK(d(rotated[i], rotated[j]) ==
              doctest::Approx(d(pts[i], pts[j])).epsilon(1e-12));
  }

  SUBCASE("explosion clears a disc around the center") {
    auto blown = pts;
    const std::array<double, 2> c{0.5, 0.5};
    mutations::explode(blown, c, 0.25, 0.05, g);
    for (const auto& p : blown)
      CHECK(std::hypot(p[0] - c[0], p[1] - c[1]) >= 0.25 - 1e-12);
  }

  SUBCASE("implosion contracts the disc, leaves the rest alone") {
    auto shrunk = pts;
    const std::array<double, 2> c{0.4, 0.4};
    mutations::implode(shrunk, c, 0.3, 0.5);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double before = std::hypot(pts[i][0] - c[0], pts[i][1] - c[1]);
      const double after =
          std::hypot(shrunk[i][0] - c[0], shrunk[i][1] - c[1]);
      if (before >= 0.3)
        CHECK(after == doctest::Approx(before).epsilon(1e-12));
      else
        CHECK(after == doctest::Approx(0.5 * before).epsilon(1e-12));
    }
  }

  SUBCASE("projection leaves selected points collinear with the line") {
    auto proj = pts;
    std::vector<std::uint8_t> sel(pts.size(), 0);
    for (std::size_t i = 0; i < sel.size(); i += 2) sel[i] = 1;
    const std::array<double, 2> a{0.1, 0.2};
    const double angle = 0.9;
    mutations::project_line(proj, a, angle, sel);
    const double ux = std::cos(angle), uy = std::sin(angle);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double cross =
          (proj[i][0] - a[0]) * uy - (proj[i][1] - a[1]) * ux;
      if (sel[i])
        CHECK(std::abs(cross) < 1e-9);
      else
        CHECK(proj[i] == pts[i]);
    }
  }

  SUBCASE("renormalize_outward is the identity inside the unit square") {
    auto inside = pts;
    mutations::renormalize_outward(inside);
    // pts were drawn in [0,1) but min/max don't reach 0/1 exactly, so the
    // no-op path requires the *bounding* range [min(0,.), max(1,.)] == 1
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(inside[i] == pts[i]);

    mutations::points wild{{-1.0, 0.5}, {0.5, 2.0}, {3.0, -0.25}};
    mutations::renormalize_outward(wild);
    for (const auto& p : wild) {
      CHECK(p[0] >= 0.0);
      CHECK(p[0] <= 1.0);
      CHECK(p[1] >= 0.0);
      CHECK(p[1] <= 1.0);
    }
  }
}

TEST_CASE("mutated distributions stay in the unit square and are seeded") {
  for (const char* name : {"explosion", "implosion", "rotation",
                           "linear_projection", "expansion", "grid"}) {
    auto a = make("CVRP", 60, name, 31);
    auto b = make("CVRP", 60, name, 31);
    CHECK(instance_hash(a) == instance_hash(b));
    CHECK(a.distribution == name);
    for (const auto& p : a.coords) {
      CHECK(p[0] >= -1e-12);
      CHECK(p[0] <= 1.0 + 1e-12);
      CHECK(p[1] >= -1e-12);
      CHECK(p[1] <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("distribution spec naming round-trips") {
  CHECK(distribution_spec::uniform().name() == "uniform");
  CHECK(distribution_spec::gaussian(3, 10).name() == "gm3x10");
  CHECK(distribution_spec::parse("gm7x50").gm_modes == 7);
  CHECK(distribution_spec::parse("gm7x50").gm_spread == 50);
  CHECK(distribution_spec::parse("expansion").k ==
        distribution_spec::kind::mutated);
  CHECK_THROWS(distribution_spec::parse("gm2x10"));
  CHECK_THROWS(distribution_spec::parse("nope"));
  CHECK(distribution_spec::training_set().size() == 11);
}

TEST_CASE("serialization round-trips every variant") {
  for (const auto& v : all_variants()) {
    auto inst = make(v.name(), 12, "uniform", 77);
    auto back = instance_from_json(to_json(inst));
    CHECK(instance_hash(back) == instance_hash(inst));
    CHECK(back.variant == v);
    // canonicalization is idempotent
    CHECK(to_json(back) == to_json(inst));
  }
}

TEST_CASE("deserialization rejects inconsistent documents") {
  auto inst = make("VRPTW", 8, "uniform", 3);
  std::string line = to_json(inst);

  auto swap = [&](const std::string& from, const std::string& to) {
    std::string s = line;
    auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    s.replace(pos, from.size(), to);
    return s;
  };
  // claim a variant without windows while carrying them
  CHECK_THROWS(instance_from_json(swap("\"variant\":\"VRPTW\"",
                                       "\"variant\":\"CVRP\"")));
  // wrong scale vs array sizes
  CHECK_THROWS(instance_from_json(swap("\"scale\":8", "\"scale\":9")));
  CHECK_THROWS(instance_from_json("{\"format_version\":2}"));
}

TEST_CASE("dataset files round-trip") {
  namespace fs = std::filesystem;
  generator_config cfg;
  cfg.variant = variant_flags::parse("OVRPLTW");
  cfg.scale = 15;
  cfg.dist = distribution_spec::parse("gm5x30");
  cfg.seed = 99;
  auto set = generate_dataset(cfg, 7);
  REQUIRE(set.size() == 7);
  std::set<std::string> hashes;
  for (const auto& inst : set) hashes.insert(instance_hash(inst));
  CHECK(hashes.size() == 7);  // per-index sub-seeds give distinct instances

  auto dir = vrplab::testing::tmp_dir("vrplab_instances");
  write_dataset(set, dir + "/set.jsonl");
  auto back = read_dataset(dir + "/set.jsonl");
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    CHECK(instance_hash(back[i]) == instance_hash(set[i]));
}

TEST_CASE("generation invariants hold across variants and scales") {
  for (const auto& v : all_variants()) {
    for (int scale : {5, 37}) {
      auto inst = make(v.name(), scale, "uniform", 500 + scale);
      CHECK(inst.n_nodes() == scale + 1);
      CHECK(static_cast<int>(inst.coords.size()) == scale + 1);
      CHECK(static_cast<int>(inst.demand.size()) == scale + 1);
      CHECK(static_cast<int>(inst.pickup.size()) == scale + 1);
      CHECK((inst.variant.time_window
                 ? inst.tw_open.size() == inst.coords.size()
                 : inst.tw_open.empty()));
      if (!v.backhaul)
        for (auto f : inst.pickup) CHECK(f == 0);
      if (v.duration_limit)
        CHECK(inst.route_limit > 0.0);
      // symmetric positive distances with zero diagonal
      CHECK(inst.dist(0, 0) == 0.0);
      CHECK(inst.dist(1, scale) == doctest::Approx(inst.dist(scale, 1)));
    }
  }
}
