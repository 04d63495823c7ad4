#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vrplab/rng.hpp"

// Instance generation for the 16 VRP variants: coordinates (uniform / gaussian
// mixture / mutated), integer demands normalized by vehicle capacity, optional
// backhaul flags, time windows and a per-route distance limit. All generation
// is driven by derived rng sub-streams so individual fields are reproducible
// independently of each other.

namespace vrplab {

// route-time horizon for windowed variants (depot window is [0, horizon])
inline constexpr double kTimeHorizon = 4.6;

struct variant_flags {
  bool open_route = false;
  bool backhaul = false;
  bool duration_limit = false;
  bool time_window = false;

  std::string name() const;  // e.g. {B,TW} -> "VRPBTW"
  static variant_flags parse(const std::string& name);  // throws on unknown
  bool operator==(const variant_flags&) const = default;
};

// all 16 variants in a fixed canonical order
const std::vector<variant_flags>& all_variants();

enum class mutation_op {
  explosion,
  implosion,
  rotation,
  linear_projection,
  expansion,
  grid,
};

const char* mutation_name(mutation_op op);
mutation_op parse_mutation(const std::string& name);

struct distribution_spec {
  enum class kind { uniform, gaussian_mixture, mutated };
  kind k = kind::uniform;
  int gm_modes = 1;   // m in {1,3,5,7}
  int gm_spread = 1;  // c in {1,10,30,50}
  mutation_op op = mutation_op::explosion;

  std::string name() const;  // "uniform" | "gm3x10" | "explosion" | ...
  static distribution_spec parse(const std::string& name);
  static distribution_spec uniform();
  static distribution_spec gaussian(int modes, int spread);
  static distribution_spec mutated(mutation_op op);
  // the 11 training distributions: uniform + {1x1, {3,5,7}x{10,30,50}}
  static const std::vector<distribution_spec>& training_set();
  bool operator==(const distribution_spec&) const = default;
};

// mutation operator parameters (the source description names the operators but
// not their numeric knobs; these defaults are versioned and overridable)
struct mutation_params {
  int version = 1;
  double explosion_radius_lo = 0.1, explosion_radius_hi = 0.3;
  double explosion_jitter_mean = 0.05;
  double implosion_radius_lo = 0.1, implosion_radius_hi = 0.3;
  double implosion_contract_lo = 0.1, implosion_contract_hi = 0.5;
  double projection_select_lo = 0.2, projection_select_hi = 0.5;
  double expansion_radius_lo = 0.05, expansion_radius_hi = 0.2;
  double expansion_jitter_mean = 0.05;
  double grid_size_lo = 0.2, grid_size_hi = 0.5;
  int grid_dim_lo = 2, grid_dim_hi = 7;
  double grid_select_lo = 0.3, grid_select_hi = 0.8;
  double grid_jitter = 0.01;
};

struct problem_instance {
  variant_flags variant;
  int scale = 0;     // M, number of customers
  int capacity = 0;  // vehicle capacity C before normalization
  std::vector<std::array<double, 2>> coords;  // M+1 nodes, [0] is the depot
  std::vector<double> demand;       // normalized by C; depot entry 0
  std::vector<std::uint8_t> pickup; // 1 = backhaul customer; all 0 unless B
  // present (size M+1) iff variant.time_window; depot [0, kTimeHorizon], s=0
  std::vector<double> tw_open, tw_close, service;
  double route_limit = 0.0;  // rho; meaningful iff variant.duration_limit
  std::string distribution = "uniform";
  std::uint64_t seed = 0;

  int n_nodes() const { return scale + 1; }
  double dist(int i, int j) const;
  double max_depot_dist() const;
};

struct generator_config {
  int scale = 50;
  variant_flags variant;
  distribution_spec dist;
  std::uint64_t seed = 0;
  mutation_params mutation;
};

// rng sub-stream tags (rng::derive(seed, tag)), one per generated field
namespace streams {
inline constexpr std::uint64_t coords = 1;
inline constexpr std::uint64_t mutation = 2;
inline constexpr std::uint64_t demands = 3;  // covers pickup flags too
inline constexpr std::uint64_t time_windows = 4;
inline constexpr std::uint64_t distance_limit = 5;
inline constexpr std::uint64_t dataset = 6;  // per-index instance seeds
}  // namespace streams

int vehicle_capacity(int scale);  // C = 30 + floor(M/5)

// coordinate generators; both return M+1 points with node 0 the depot
std::vector<std::array<double, 2>> gen_coords_uniform(int scale, rng& g);
// m cluster centers are themselves customers 1..m; the remaining M-m
// customers are split evenly (remainder to the lowest-index clusters) and
// drawn N(center, I); everything min-max scaled per axis to [0,1]
std::vector<std::array<double, 2>> gen_coords_gaussian_mixture(int scale,
                                                               int modes,
                                                               int spread,
                                                               rng& g);

// raw mutation ops (no rescaling); exposed for property tests
namespace mutations {
using points = std::vector<std::array<double, 2>>;
void explode(points& p, std::array<double, 2> center, double radius,
             double jitter_mean, rng& g);
void implode(points& p, std::array<double, 2> center, double radius,
             double contract);
void rotate(points& p, std::array<double, 2> pivot, double theta);
void project_line(points& p, std::array<double, 2> anchor, double angle,
                  const std::vector<std::uint8_t>& selected);
void expand(points& p, std::array<double, 2> anchor, double angle,
            double radius, double jitter_mean, rng& g);
void snap_grid(points& p, std::array<double, 2> origin, double w, double h,
               int rows, int cols, const std::vector<int>& selected,
               double jitter, rng& g);
// per-axis map back into [0,1]; identity when already inside the unit square
void renormalize_outward(points& p);
}  // namespace mutations

void apply_mutation(std::vector<std::array<double, 2>>& coords, mutation_op op,
                    const mutation_params& params, rng& g);

void gen_demands(problem_instance& inst, rng& g);
void gen_time_windows(problem_instance& inst, rng& g);
void gen_distance_limit(problem_instance& inst, rng& g);

problem_instance generate_instance(const generator_config& cfg);
std::vector<problem_instance> generate_dataset(const generator_config& cfg,
                                               int count);

// fraction of customers flagged as backhaul pickups
double backhaul_ratio(const problem_instance& inst);

// canonical JSON (single line, fixed key order); datasets are one per line
std::string to_json(const problem_instance& inst);
problem_instance instance_from_json(const std::string& line);
void write_dataset(const std::vector<problem_instance>& set,
                   const std::string& path);
std::vector<problem_instance> read_dataset(const std::string& path);

// FNV-1a over the canonical JSON, as 16 hex chars
std::string instance_hash(const problem_instance& inst);

}  // namespace vrplab
