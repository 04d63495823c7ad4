#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "vrplab/instance.hpp"
#include "vrplab/model.hpp"
#include "vrplab/policy.hpp"

// Greedy multi-start evaluation with optional x8 augmentation, gap reports
// against a reference solver (built-in heuristic / exact, or an imported
// reference file), and test-suite construction (in-distribution and the
// 16-variant x 6-mutation OOD grid).

namespace vrplab {

struct eval_options {
  int m = 10;        // forced second actions 1..m (clamped to the scale)
  bool aug = false;  // evaluate all 8 unit-square symmetries
  enum class ref_kind { heuristic, exact, file } ref = ref_kind::heuristic;
  std::string ref_path;  // when ref == file
  std::string suite = "custom";
};

struct instance_result {
  std::string hash;
  double objective = 0.0;
  double reference = 0.0;
  double gap_pct = 0.0;
  long traj = 0;  // executed trajectories (skipped starts excluded)
  double seconds = 0.0;
  std::vector<int> tour;      // best found
  std::vector<int> ref_tour;  // empty for file references
};

struct gap_row {
  std::string suite, variant, distribution;
  int scale = 0;
  int m = 0;
  bool aug = false;
  double traj = 0.0;  // mean executed trajectories per instance
  double gflops = 0.0;
  double mean_obj = 0.0, mean_ref = 0.0, gap_pct = 0.0;
  double sec_per_instance = 0.0;
};

inline constexpr const char* kGapCsvHeader =
    "suite,variant,distribution,scale,m,aug,traj,gflops,mean_obj,mean_ref,"
    "gap_pct,sec_per_instance";

std::vector<gap_row> evaluate(const policy_params& params,
                              const std::vector<problem_instance>& instances,
                              const eval_options& opt,
                              std::vector<instance_result>* per_instance);

void write_gap_csv(const std::vector<gap_row>& rows, const std::string& path);

// ---- solution documents ----
struct solution_doc {
  std::string instance_hash;
  std::vector<int> tour;
  double objective = 0.0;
  bool feasible = false;
};
std::string to_json(const solution_doc& doc);
solution_doc solution_from_json(const std::string& line);
solution_doc make_solution(const problem_instance& inst,
                           const std::vector<int>& tour);

// ---- reference files: JSONL of solution documents ----
void write_reference(const std::vector<instance_result>& results,
                     const std::string& path);
// objectives aligned with `instances`; throws when a hash is missing or the
// file carries hashes that match no instance
std::vector<double> import_reference(
    const std::string& path, const std::vector<problem_instance>& instances);

// ---- suites ----
struct suite_cell {
  std::string variant, distribution;
  int scale = 0;
  int count = 0;
  std::string file;  // dataset path relative to the manifest
};
struct suite_manifest {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<suite_cell> cells;
};

// all 16 variants x 6 mutation distributions at one scale
suite_manifest build_ood_suite(int scale, int per_cell, std::uint64_t seed,
                               const std::string& dir);
// all 16 variants x uniform at each scale
suite_manifest build_id_suite(const std::vector<int>& scales, int per_cell,
                              std::uint64_t seed, const std::string& dir);
void write_suite_manifest(const suite_manifest& m, const std::string& path);
suite_manifest read_suite_manifest(const std::string& path);

}  // namespace vrplab
