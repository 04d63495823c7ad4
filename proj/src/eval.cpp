#include "vrplab/eval.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "vrplab/env.hpp"
#include "vrplab/refsolve.hpp"
#include "vrplab/rng.hpp"
#include <json.hpp>

namespace vrplab {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt6(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << x;
  return os.str();
}

}  // namespace

std::vector<gap_row> evaluate(const policy_params& params,
                              const std::vector<problem_instance>& instances,
                              const eval_options& opt,
                              std::vector<instance_result>* per_instance) {
  if (opt.m < 1) throw std::invalid_argument("eval: m must be >= 1");
  std::vector<double> file_refs;
  if (opt.ref == eval_options::ref_kind::file)
    file_refs = import_reference(opt.ref_path, instances);

  struct cell_agg {
    std::string variant, dist;
    int scale = 0;
    double obj = 0, ref = 0, gap = 0, traj = 0, sec = 0;
    int n = 0;
  };
  std::vector<cell_agg> cells;
  std::map<std::string, std::size_t> cell_index;

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const problem_instance& inst = instances[i];
    const int m_eff = std::min(opt.m, inst.scale);
    auto t0 = std::chrono::steady_clock::now();

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_tour;
    long executed = 0;
    const int n_copies = opt.aug ? 8 : 1;
    std::array<problem_instance, 8> copies;
    if (opt.aug)
      copies = augment8(inst);
    else
      copies[0] = inst;
    for (int c = 0; c < n_copies; ++c) {
      policy_context ctx = make_context(params, copies[c]);
      for (int k = 1; k <= m_eff; ++k) {
        auto r = rollout(params, ctx, copies[c], k, decode_mode::greedy,
                         nullptr);
        if (!r) continue;  // infeasible forced start, skipped
        ++executed;
        if (r->objective < best) {
          best = r->objective;
          best_tour = r->tour;
        }
      }
    }
    if (best_tour.empty()) {
      // every forced start was infeasible (masks are shared across the 8
      // symmetries); fall back to one unforced greedy rollout
      policy_context ctx = make_context(params, inst);
      auto r = rollout(params, ctx, inst, 0, decode_mode::greedy, nullptr);
      if (!r) throw std::runtime_error("eval: unforced rollout failed");
      best = r->objective;
      best_tour = r->tour;
      ++executed;
    }

    validation_result v = validate_solution(inst, best_tour);
    if (!v.feasible)
      throw std::runtime_error("eval: best tour failed validation: " +
                               v.reason);
    double obj = v.objective;
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                               t0)
                     .count();

    double ref = 0.0;
    std::vector<int> ref_tour;
    switch (opt.ref) {
      case eval_options::ref_kind::heuristic: {
        ref_solution rs = solve_heuristic(inst);
        ref = rs.objective;
        ref_tour = rs.tour;
        break;
      }
      case eval_options::ref_kind::exact: {
        ref_solution rs = solve_exact(inst);
        ref = rs.objective;
        ref_tour = rs.tour;
        break;
      }
      case eval_options::ref_kind::file:
        ref = file_refs[i];
        break;
    }
    if (!(ref > 0.0))
      throw std::runtime_error("eval: nonpositive reference objective");
    double gap = (obj - ref) / ref * 100.0;

    if (per_instance) {
      instance_result r;
      r.hash = instance_hash(inst);
      r.objective = obj;
      r.reference = ref;
      r.gap_pct = gap;
      r.traj = executed;
      r.seconds = sec;
      r.tour = best_tour;
      r.ref_tour = std::move(ref_tour);
      per_instance->push_back(std::move(r));
    }

    std::string key = inst.variant.name() + "|" + inst.distribution + "|" +
                      std::to_string(inst.scale);
    auto it = cell_index.find(key);
    if (it == cell_index.end()) {
      it = cell_index.emplace(key, cells.size()).first;
      cell_agg a;
      a.variant = inst.variant.name();
      a.dist = inst.distribution;
      a.scale = inst.scale;
      cells.push_back(a);
    }
    cell_agg& a = cells[it->second];
    a.obj += obj;
    a.ref += ref;
    a.gap += gap;
    a.traj += static_cast<double>(executed);
    a.sec += sec;
    a.n += 1;
  }

  std::vector<gap_row> rows;
  rows.reserve(cells.size());
  for (const cell_agg& a : cells) {
    gap_row r;
    r.suite = opt.suite;
    r.variant = a.variant;
    r.distribution = a.dist;
    r.scale = a.scale;
    r.m = opt.m;
    r.aug = opt.aug;
    r.traj = a.traj / a.n;
    r.gflops = flops_estimate(params.cfg, a.scale, std::min(opt.m, a.scale),
                              opt.aug);
    r.mean_obj = a.obj / a.n;
    r.mean_ref = a.ref / a.n;
    r.gap_pct = a.gap / a.n;
    r.sec_per_instance = a.sec / a.n;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_gap_csv(const std::vector<gap_row>& rows, const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << kGapCsvHeader << "\n";
  for (const gap_row& r : rows) {
    out << r.suite << ',' << r.variant << ',' << r.distribution << ','
        << r.scale << ',' << r.m << ',' << (r.aug ? 1 : 0) << ','
        << fmt6(r.traj) << ',' << fmt6(r.gflops) << ',' << fmt6(r.mean_obj)
        << ',' << fmt6(r.mean_ref) << ',' << fmt6(r.gap_pct) << ','
        << fmt6(r.sec_per_instance) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- solution documents ----

std::string to_json(const solution_doc& doc) {
  ordered_json j;
  j["format_version"] = 1;
  j["instance_hash"] = doc.instance_hash;
  j["tour"] = doc.tour;
  j["objective"] = doc.objective;
  j["feasible"] = doc.feasible;
  return j.dump();
}

solution_doc solution_from_json(const std::string& line) {
  ordered_json j = ordered_json::parse(line);
  if (!j.is_object()) throw std::runtime_error("solution: not a JSON object");
  for (const char* key : {"instance_hash", "tour", "objective", "feasible"})
    if (!j.contains(key))
      throw std::runtime_error(std::string("solution: missing field '") + key +
                               "'");
  solution_doc doc;
  doc.instance_hash = j.at("instance_hash").get<std::string>();
  doc.tour = j.at("tour").get<std::vector<int>>();
  doc.objective = j.at("objective").get<double>();
  doc.feasible = j.at("feasible").get<bool>();
  return doc;
}

solution_doc make_solution(const problem_instance& inst,
                           const std::vector<int>& tour) {
  validation_result v = validate_solution(inst, tour);
  solution_doc doc;
  doc.instance_hash = instance_hash(inst);
  doc.tour = tour;
  doc.objective = v.objective;
  doc.feasible = v.feasible;
  return doc;
}

// ---- reference files ----

void write_reference(const std::vector<instance_result>& results,
                     const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const instance_result& r : results) {
    if (r.ref_tour.empty())
      throw std::runtime_error(
          "reference export needs solver tours (references came from a file)");
    solution_doc doc;
    doc.instance_hash = r.hash;
    doc.tour = r.ref_tour;
    doc.objective = r.reference;
    doc.feasible = true;
    out << to_json(doc) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<double> import_reference(
    const std::string& path, const std::vector<problem_instance>& instances) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::unordered_map<std::string, std::size_t> by_hash;
  for (std::size_t i = 0; i < instances.size(); ++i)
    by_hash.emplace(instance_hash(instances[i]), i);

  std::unordered_map<std::string, double> refs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    solution_doc doc;
    try {
      doc = solution_from_json(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
    auto it = by_hash.find(doc.instance_hash);
    if (it == by_hash.end())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": reference hash " + doc.instance_hash +
                               " matches no instance in the dataset");
    if (!doc.feasible)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": reference solution marked infeasible");
    if (!doc.tour.empty()) {
      validation_result v = validate_solution(instances[it->second], doc.tour);
      if (!v.feasible)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": reference tour invalid: " + v.reason);
      if (std::abs(v.objective - doc.objective) > 1e-6)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": stored objective disagrees with the tour");
    }
    if (!refs.emplace(doc.instance_hash, doc.objective).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": duplicate reference for hash " +
                               doc.instance_hash);
  }

  std::vector<double> out(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto it = refs.find(instance_hash(instances[i]));
    if (it == refs.end())
      throw std::runtime_error(path + ": no reference for instance " +
                               std::to_string(i) + " (hash " +
                               instance_hash(instances[i]) + ")");
    out[i] = it->second;
  }
  return out;
}

// ---- suites ----

namespace {

suite_cell make_cell(const variant_flags& variant,
                     const distribution_spec& dist, int scale, int per_cell,
                     std::uint64_t cell_seed, const std::string& dir) {
  generator_config cfg;
  cfg.scale = scale;
  cfg.variant = variant;
  cfg.dist = dist;
  cfg.seed = cell_seed;
  std::vector<problem_instance> set = generate_dataset(cfg, per_cell);
  suite_cell cell;
  cell.variant = variant.name();
  cell.distribution = dist.name();
  cell.scale = scale;
  cell.count = per_cell;
  cell.file = variant.name() + "_" + dist.name() + "_" +
              std::to_string(scale) + ".jsonl";
  write_dataset(set, (fs::path(dir) / cell.file).string());
  return cell;
}

}  // namespace

suite_manifest build_ood_suite(int scale, int per_cell, std::uint64_t seed,
                               const std::string& dir) {
  fs::create_directories(dir);
  suite_manifest m;
  m.name = "ood";
  m.seed = seed;
  std::uint64_t idx = 0;
  for (const variant_flags& variant : all_variants()) {
    for (mutation_op op :
         {mutation_op::explosion, mutation_op::implosion, mutation_op::rotation,
          mutation_op::linear_projection, mutation_op::expansion,
          mutation_op::grid}) {
      m.cells.push_back(make_cell(variant, distribution_spec::mutated(op),
                                  scale, per_cell, rng::derive(seed, idx),
                                  dir));
      ++idx;
    }
  }
  return m;
}

suite_manifest build_id_suite(const std::vector<int>& scales, int per_cell,
                              std::uint64_t seed, const std::string& dir) {
  fs::create_directories(dir);
  suite_manifest m;
  m.name = "id";
  m.seed = seed;
  std::uint64_t idx = 0;
  for (int scale : scales)
    for (const variant_flags& variant : all_variants()) {
      m.cells.push_back(make_cell(variant, distribution_spec::uniform(), scale,
                                  per_cell, rng::derive(seed, idx), dir));
      ++idx;
    }
  return m;
}

void write_suite_manifest(const suite_manifest& m, const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  ordered_json j;
  j["format_version"] = 1;
  j["name"] = m.name;
  j["seed"] = m.seed;
  j["cells"] = ordered_json::array();
  for (const suite_cell& c : m.cells) {
    ordered_json jc;
    jc["variant"] = c.variant;
    jc["distribution"] = c.distribution;
    jc["scale"] = c.scale;
    jc["count"] = c.count;
    jc["file"] = c.file;
    j["cells"].push_back(jc);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

suite_manifest read_suite_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ordered_json j = ordered_json::parse(in);
  suite_manifest m;
  m.name = j.at("name").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& jc : j.at("cells")) {
    suite_cell c;
    c.variant = jc.at("variant").get<std::string>();
    c.distribution = jc.at("distribution").get<std::string>();
    c.scale = jc.at("scale").get<int>();
    c.count = jc.at("count").get<int>();
    c.file = jc.at("file").get<std::string>();
    m.cells.push_back(std::move(c));
  }
  return m;
}

}  // namespace vrplab
