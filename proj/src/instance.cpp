#include "vrplab/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vrplab {
namespace {

using json = nlohmann::ordered_json;

constexpr double kTwoPi = 6.283185307179586476925286766559;

double exp_jitter(double mean, rng& g) {
  return -mean * std::log(1.0 - g.uniform());
}

void minmax_scale(std::vector<std::array<double, 2>>& pts) {
  for (int axis = 0; axis < 2; ++axis) {
    double lo = pts[0][axis], hi = pts[0][axis];
    for (const auto& p : pts) {
      lo = std::min(lo, p[axis]);
      hi = std::max(hi, p[axis]);
    }
    const double range = hi - lo;
    if (range < 1e-12) {
      for (auto& p : pts) p[axis] = 0.5;
    } else {
      for (auto& p : pts) p[axis] = (p[axis] - lo) / range;
    }
  }
}

}  // namespace

std::string variant_flags::name() const {
  if (!open_route && !backhaul && !duration_limit && !time_window) return "CVRP";
  std::string s;
  if (open_route) s += "O";
  s += "VRP";
  if (backhaul) s += "B";
  if (duration_limit) s += "L";
  if (time_window) s += "TW";
  return s;
}

variant_flags variant_flags::parse(const std::string& name) {
  for (const auto& v : all_variants())
    if (v.name() == name) return v;
  throw std::invalid_argument("unknown variant: " + name);
}

const std::vector<variant_flags>& all_variants() {
  static const std::vector<variant_flags> table = [] {
    // O = open route, B = backhaul, L = distance limit, TW = time windows
    const bool f = false, t = true;
    return std::vector<variant_flags>{
        {f, f, f, f},  // CVRP
        {t, f, f, f},  // OVRP
        {f, t, f, f},  // VRPB
        {f, f, t, f},  // VRPL
        {f, f, f, t},  // VRPTW
        {t, f, f, t},  // OVRPTW
        {t, t, f, f},  // OVRPB
        {t, f, t, f},  // OVRPL
        {f, t, t, f},  // VRPBL
        {f, t, f, t},  // VRPBTW
        {f, f, t, t},  // VRPLTW
        {t, t, t, f},  // OVRPBL
        {t, t, f, t},  // OVRPBTW
        {t, f, t, t},  // OVRPLTW
        {f, t, t, t},  // VRPBLTW
        {t, t, t, t},  // OVRPBLTW
    };
  }();
  return table;
}

const char* mutation_name(mutation_op op) {
  switch (op) {
    case mutation_op::explosion: return "explosion";
    case mutation_op::implosion: return "implosion";
    case mutation_op::rotation: return "rotation";
    case mutation_op::linear_projection: return "linear_projection";
    case mutation_op::expansion: return "expansion";
    case mutation_op::grid: return "grid";
  }
  return "?";
}

mutation_op parse_mutation(const std::string& name) {
  for (int i = 0; i < 6; ++i) {
    const auto op = static_cast<mutation_op>(i);
    if (name == mutation_name(op)) return op;
  }
  throw std::invalid_argument("unknown mutation: " + name);
}

std::string distribution_spec::name() const {
  switch (k) {
    case kind::uniform: return "uniform";
    case kind::gaussian_mixture:
      return "gm" + std::to_string(gm_modes) + "x" + std::to_string(gm_spread);
    case kind::mutated: return mutation_name(op);
  }
  return "?";
}

distribution_spec distribution_spec::parse(const std::string& name) {
  if (name == "uniform") return uniform();
  if (name.rfind("gm", 0) == 0) {
    const auto x = name.find('x');
    if (x != std::string::npos) {
      try {
        return gaussian(std::stoi(name.substr(2, x - 2)),
                        std::stoi(name.substr(x + 1)));
      } catch (const std::exception&) {
      }
    }
    throw std::invalid_argument("bad gaussian mixture spec: " + name);
  }
  return mutated(parse_mutation(name));
}

distribution_spec distribution_spec::uniform() { return {}; }

distribution_spec distribution_spec::gaussian(int modes, int spread) {
  const bool modes_ok =
      modes == 1 || modes == 3 || modes == 5 || modes == 7;
  const bool spread_ok =
      spread == 1 || spread == 10 || spread == 30 || spread == 50;
  if (!modes_ok || !spread_ok)
    throw std::invalid_argument("gaussian mixture outside the gm{1,3,5,7}x"
                                "{1,10,30,50} family: gm" +
                                std::to_string(modes) + "x" +
                                std::to_string(spread));
  distribution_spec d;
  d.k = kind::gaussian_mixture;
  d.gm_modes = modes;
  d.gm_spread = spread;
  return d;
}

distribution_spec distribution_spec::mutated(mutation_op op) {
  distribution_spec d;
  d.k = kind::mutated;
  d.op = op;
  return d;
}

const std::vector<distribution_spec>& distribution_spec::training_set() {
  static const std::vector<distribution_spec> set = [] {
    std::vector<distribution_spec> s{uniform(), gaussian(1, 1)};
    for (int m : {3, 5, 7})
      for (int c : {10, 30, 50}) s.push_back(gaussian(m, c));
    return s;
  }();
  return set;
}

double problem_instance::dist(int i, int j) const {
  const double dx = coords[i][0] - coords[j][0];
  const double dy = coords[i][1] - coords[j][1];
  return std::sqrt(dx * dx + dy * dy);
}

double problem_instance::max_depot_dist() const {
  double mx = 0.0;
  for (int j = 1; j < n_nodes(); ++j) mx = std::max(mx, dist(0, j));
  return mx;
}

int vehicle_capacity(int scale) { return 30 + scale / 5; }

std::vector<std::array<double, 2>> gen_coords_uniform(int scale, rng& g) {
  std::vector<std::array<double, 2>> pts(scale + 1);
  for (auto& p : pts) {
    p[0] = g.uniform();
    p[1] = g.uniform();
  }
  return pts;
}

std::vector<std::array<double, 2>> gen_coords_gaussian_mixture(int scale,
                                                               int modes,
                                                               int spread,
                                                               rng& g) {
  if (modes < 1 || modes > scale)
    throw std::invalid_argument("gaussian mixture: bad mode count");
  std::vector<std::array<double, 2>> pts;
  pts.reserve(scale + 1);
  pts.push_back({g.uniform(), g.uniform()});  // depot
  const double c = static_cast<double>(spread);
  std::vector<std::array<double, 2>> centers(modes);
  for (auto& ctr : centers) {
    ctr = {g.uniform() * c, g.uniform() * c};
    pts.push_back(ctr);  // centers are customers themselves
  }
  // remaining customers split evenly; remainder goes to lowest-index clusters
  const int rest = scale - modes;
  const int base = rest / modes, rem = rest % modes;
  for (int j = 0; j < modes; ++j) {
    const int size = base + (j < rem ? 1 : 0);
    for (int k = 0; k < size; ++k) {
      const double x = centers[j][0] + g.normal();
      const double y = centers[j][1] + g.normal();
      pts.push_back({x, y});
    }
  }
  minmax_scale(pts);
  return pts;
}

namespace mutations {

void explode(points& p, std::array<double, 2> center, double radius,
             double jitter_mean, rng& g) {
  for (auto& pt : p) {
    const double dx = pt[0] - center[0], dy = pt[1] - center[1];
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d >= radius) continue;
    double ux, uy;
    if (d > 1e-15) {
      ux = dx / d;
      uy = dy / d;
    } else {
      const double phi = g.uniform(0.0, kTwoPi);
      ux = std::cos(phi);
      uy = std::sin(phi);
    }
    const double r = radius + exp_jitter(jitter_mean, g);
    pt[0] = center[0] + r * ux;
    pt[1] = center[1] + r * uy;
  }
}

void implode(points& p, std::array<double, 2> center, double radius,
             double contract) {
  for (auto& pt : p) {
    const double dx = pt[0] - center[0], dy = pt[1] - center[1];
    if (std::sqrt(dx * dx + dy * dy) >= radius) continue;
    pt[0] = center[0] + contract * dx;
    pt[1] = center[1] + contract * dy;
  }
}

void rotate(points& p, std::array<double, 2> pivot, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  for (auto& pt : p) {
    const double dx = pt[0] - pivot[0], dy = pt[1] - pivot[1];
    pt[0] = pivot[0] + c * dx - s * dy;
    pt[1] = pivot[1] + s * dx + c * dy;
  }
}

void project_line(points& p, std::array<double, 2> anchor, double angle,
                  const std::vector<std::uint8_t>& selected) {
  const double ux = std::cos(angle), uy = std::sin(angle);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!selected[i]) continue;
    const double along =
        (p[i][0] - anchor[0]) * ux + (p[i][1] - anchor[1]) * uy;
    p[i][0] = anchor[0] + along * ux;
    p[i][1] = anchor[1] + along * uy;
  }
}

void expand(points& p, std::array<double, 2> anchor, double angle,
            double radius, double jitter_mean, rng& g) {
  const double ux = std::cos(angle), uy = std::sin(angle);
  const double nx = -uy, ny = ux;
  for (auto& pt : p) {
    const double vx = pt[0] - anchor[0], vy = pt[1] - anchor[1];
    const double along = vx * ux + vy * uy;
    const double perp = vx * nx + vy * ny;
    if (std::abs(perp) >= radius) continue;
    const double sign = perp >= 0.0 ? 1.0 : -1.0;
    const double r = radius + exp_jitter(jitter_mean, g);
    pt[0] = anchor[0] + along * ux + sign * r * nx;
    pt[1] = anchor[1] + along * uy + sign * r * ny;
  }
}

void snap_grid(points& p, std::array<double, 2> origin, double w, double h,
               int rows, int cols, const std::vector<int>& selected,
               double jitter, rng& g) {
  const double sx = cols > 1 ? w / (cols - 1) : 0.0;
  const double sy = rows > 1 ? h / (rows - 1) : 0.0;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const int col = static_cast<int>(k) % cols;
    const int row = (static_cast<int>(k) / cols) % rows;
    auto& pt = p[selected[k]];
    pt[0] = origin[0] + col * sx + g.uniform(-jitter, jitter);
    pt[1] = origin[1] + row * sy + g.uniform(-jitter, jitter);
  }
}

void renormalize_outward(points& p) {
  for (int axis = 0; axis < 2; ++axis) {
    double lo = 0.0, hi = 1.0;
    for (const auto& pt : p) {
      lo = std::min(lo, pt[axis]);
      hi = std::max(hi, pt[axis]);
    }
    const double range = hi - lo;
    if (range == 1.0) continue;  // already inside the unit square
    for (auto& pt : p) pt[axis] = (pt[axis] - lo) / range;
  }
}

}  // namespace mutations

void apply_mutation(std::vector<std::array<double, 2>>& coords, mutation_op op,
                    const mutation_params& params, rng& g) {
  using namespace mutations;
  switch (op) {
    case mutation_op::explosion: {
      const std::array<double, 2> c{g.uniform(), g.uniform()};
      const double r = g.uniform(params.explosion_radius_lo,
                                 params.explosion_radius_hi);
      explode(coords, c, r, params.explosion_jitter_mean, g);
      break;
    }
    case mutation_op::implosion: {
      const std::array<double, 2> c{g.uniform(), g.uniform()};
      const double r = g.uniform(params.implosion_radius_lo,
                                 params.implosion_radius_hi);
      const double k = g.uniform(params.implosion_contract_lo,
                                 params.implosion_contract_hi);
      implode(coords, c, r, k);
      break;
    }
    case mutation_op::rotation: {
      const std::array<double, 2> pivot{g.uniform(), g.uniform()};
      rotate(coords, pivot, g.uniform(0.0, kTwoPi));
      break;
    }
    case mutation_op::linear_projection: {
      const std::array<double, 2> a{g.uniform(), g.uniform()};
      const double angle = g.uniform(0.0, kTwoPi);
      const double p_sel = g.uniform(params.projection_select_lo,
                                     params.projection_select_hi);
      std::vector<std::uint8_t> sel(coords.size());
      for (auto& s : sel) s = g.uniform() < p_sel ? 1 : 0;
      project_line(coords, a, angle, sel);
      break;
    }
    case mutation_op::expansion: {
      const std::array<double, 2> a{g.uniform(), g.uniform()};
      const double angle = g.uniform(0.0, kTwoPi);
      const double r = g.uniform(params.expansion_radius_lo,
                                 params.expansion_radius_hi);
      expand(coords, a, angle, r, params.expansion_jitter_mean, g);
      break;
    }
    case mutation_op::grid: {
      const double w = g.uniform(params.grid_size_lo, params.grid_size_hi);
      const double h = g.uniform(params.grid_size_lo, params.grid_size_hi);
      const int rows = static_cast<int>(
          g.uniform_int(params.grid_dim_lo, params.grid_dim_hi));
      const int cols = static_cast<int>(
          g.uniform_int(params.grid_dim_lo, params.grid_dim_hi));
      const std::array<double, 2> origin{g.uniform(0.0, std::max(0.0, 1.0 - w)),
                                         g.uniform(0.0, std::max(0.0, 1.0 - h))};
      const double p_sel =
          g.uniform(params.grid_select_lo, params.grid_select_hi);
      std::vector<int> sel;
      for (std::size_t i = 0; i < coords.size(); ++i)
        if (g.uniform() < p_sel) sel.push_back(static_cast<int>(i));
      snap_grid(coords, origin, w, h, rows, cols, sel, params.grid_jitter, g);
      break;
    }
  }
  mutations::renormalize_outward(coords);
}

void gen_demands(problem_instance& inst, rng& g) {
  const int n = inst.n_nodes();
  inst.demand.assign(n, 0.0);
  inst.pickup.assign(n, 0);
  const double c = static_cast<double>(inst.capacity);
  // per customer: integer demand in {1..9}, then (backhaul only) pickup coin
  for (int i = 1; i < n; ++i) {
    inst.demand[i] = static_cast<double>(1 + g.uniform_int(9ull)) / c;
    if (inst.variant.backhaul) inst.pickup[i] = g.uniform() < 0.2 ? 1 : 0;
  }
}

void gen_time_windows(problem_instance& inst, rng& g) {
  const int n = inst.n_nodes();
  inst.tw_open.assign(n, 0.0);
  inst.tw_close.assign(n, 0.0);
  inst.service.assign(n, 0.0);
  inst.tw_close[0] = kTimeHorizon;
  for (int i = 1; i < n; ++i) {
    const double ts = g.uniform(0.15, 0.18);
    const double dt = g.uniform(0.18, 0.20);
    const double y = g.uniform();
    const double d0 = std::max(inst.dist(0, i), 1e-12);
    const double e_up = (kTimeHorizon - ts - dt) / d0 - 1.0;
    const double tl = (1.0 + (e_up - 1.0) * y) * d0;
    inst.service[i] = ts;
    inst.tw_open[i] = tl;
    inst.tw_close[i] = tl + dt;
  }
}

void gen_distance_limit(problem_instance& inst, rng& g) {
  inst.route_limit = g.uniform(2.0 * inst.max_depot_dist(), 3.0);
}

problem_instance generate_instance(const generator_config& cfg) {
  if (cfg.scale < 1) throw std::invalid_argument("scale must be >= 1");
  problem_instance inst;
  inst.variant = cfg.variant;
  inst.scale = cfg.scale;
  inst.capacity = vehicle_capacity(cfg.scale);
  inst.distribution = cfg.dist.name();
  inst.seed = cfg.seed;

  rng gc(rng::derive(cfg.seed, streams::coords));
  switch (cfg.dist.k) {
    case distribution_spec::kind::uniform:
      inst.coords = gen_coords_uniform(cfg.scale, gc);
      break;
    case distribution_spec::kind::gaussian_mixture:
      inst.coords = gen_coords_gaussian_mixture(cfg.scale, cfg.dist.gm_modes,
                                                cfg.dist.gm_spread, gc);
      break;
    case distribution_spec::kind::mutated: {
      inst.coords = gen_coords_uniform(cfg.scale, gc);
      rng gm(rng::derive(cfg.seed, streams::mutation));
      apply_mutation(inst.coords, cfg.dist.op, cfg.mutation, gm);
      break;
    }
  }

  rng gd(rng::derive(cfg.seed, streams::demands));
  gen_demands(inst, gd);
  if (cfg.variant.time_window) {
    rng gt(rng::derive(cfg.seed, streams::time_windows));
    gen_time_windows(inst, gt);
  }
  if (cfg.variant.duration_limit) {
    rng gl(rng::derive(cfg.seed, streams::distance_limit));
    gen_distance_limit(inst, gl);
  }
  return inst;
}

std::vector<problem_instance> generate_dataset(const generator_config& cfg,
                                               int count) {
  const std::uint64_t base = rng::derive(cfg.seed, streams::dataset);
  std::vector<problem_instance> set;
  set.reserve(count);
  for (int i = 0; i < count; ++i) {
    generator_config c = cfg;
    c.seed = rng::derive(base, static_cast<std::uint64_t>(i));
    set.push_back(generate_instance(c));
  }
  return set;
}

double backhaul_ratio(const problem_instance& inst) {
  int k = 0;
  for (int i = 1; i < inst.n_nodes(); ++i) k += inst.pickup[i] ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(inst.scale);
}

std::string to_json(const problem_instance& inst) {
  json j;
  j["format_version"] = 1;
  j["variant"] = inst.variant.name();
  j["scale"] = inst.scale;
  j["capacity"] = inst.capacity;
  j["distribution"] = inst.distribution;
  j["seed"] = inst.seed;
  json coords = json::array();
  for (const auto& p : inst.coords) coords.push_back({p[0], p[1]});
  j["coords"] = std::move(coords);
  j["demands"] = inst.demand;
  json pickup = json::array();
  for (auto f : inst.pickup) pickup.push_back(f != 0);
  j["pickup"] = std::move(pickup);
  if (inst.variant.time_window) {
    j["time_windows"] = {{"open", inst.tw_open},
                         {"close", inst.tw_close},
                         {"service", inst.service}};
  } else {
    j["time_windows"] = nullptr;
  }
  if (inst.variant.duration_limit)
    j["route_limit"] = inst.route_limit;
  else
    j["route_limit"] = nullptr;
  return j.dump();
}

problem_instance instance_from_json(const std::string& line) {
  const json j = json::parse(line);
  if (j.value("format_version", 0) != 1)
    throw std::runtime_error("instance: unsupported format_version");
  problem_instance inst;
  inst.variant = variant_flags::parse(j.at("variant").get<std::string>());
  inst.scale = j.at("scale").get<int>();
  inst.capacity = j.at("capacity").get<int>();
  inst.distribution = j.at("distribution").get<std::string>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& p : j.at("coords"))
    inst.coords.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  inst.demand = j.at("demands").get<std::vector<double>>();
  for (const auto& f : j.at("pickup"))
    inst.pickup.push_back(f.get<bool>() ? 1 : 0);
  const int n = inst.scale + 1;
  if (static_cast<int>(inst.coords.size()) != n ||
      static_cast<int>(inst.demand.size()) != n ||
      static_cast<int>(inst.pickup.size()) != n)
    throw std::runtime_error("instance: inconsistent array sizes");
  const auto& tw = j.at("time_windows");
  if (inst.variant.time_window != !tw.is_null())
    throw std::runtime_error("instance: time_windows inconsistent with variant");
  if (!tw.is_null()) {
    inst.tw_open = tw.at("open").get<std::vector<double>>();
    inst.tw_close = tw.at("close").get<std::vector<double>>();
    inst.service = tw.at("service").get<std::vector<double>>();
    if (static_cast<int>(inst.tw_open.size()) != n ||
        static_cast<int>(inst.tw_close.size()) != n ||
        static_cast<int>(inst.service.size()) != n)
      throw std::runtime_error("instance: inconsistent window sizes");
  }
  const auto& rl = j.at("route_limit");
  if (inst.variant.duration_limit != !rl.is_null())
    throw std::runtime_error("instance: route_limit inconsistent with variant");
  if (!rl.is_null()) inst.route_limit = rl.get<double>();
  return inst;
}

void write_dataset(const std::vector<problem_instance>& set,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& inst : set) out << to_json(inst) << "\n";
}

std::vector<problem_instance> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<problem_instance> set;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    set.push_back(instance_from_json(line));
  }
  return set;
}

std::string instance_hash(const problem_instance& inst) {
  const std::string s = to_json(inst);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace vrplab
