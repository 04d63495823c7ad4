// vrplab command line: generate / train / eval / validate / fit / flops.
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print a
// single "error: <message>" line to stderr. Every subcommand that writes
// artifacts also writes <out>/manifest.json with the effective config, its
// hash, and a hash per output file so reruns can be compared byte-for-byte
// (gap reports are hashed with the timing column zeroed, since wall-clock
// never reproduces).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrplab/env.hpp"
#include "vrplab/eval.hpp"
#include "vrplab/instance.hpp"
#include "vrplab/model.hpp"
#include "vrplab/policy.hpp"
#include "vrplab/refsolve.hpp"
#include "vrplab/scaling.hpp"
#include "vrplab/train.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace vrplab;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fnv64_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// strict config-file merge: every key must name a CLI option of this
// subcommand, and explicit command-line flags win over file values
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const std::exception& e) {
    throw usage_error(std::string("config ") + path + ": " + e.what());
  }
  if (!j.is_object()) throw usage_error("config " + path + ": not an object");
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw usage_error("unknown config key '" + key + "' in " + path);
    }
    if (opt->count() > 0) continue;  // flag given on the command line wins
    std::vector<std::string> vals;
    if (value.is_array()) {
      for (const auto& v : value)
        vals.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else if (value.is_string()) {
      vals.push_back(value.get<std::string>());
    } else if (value.is_boolean()) {
      if (value.get<bool>()) vals.push_back("true");
      else continue;  // false == flag absent
    } else {
      vals.push_back(value.dump());
    }
    for (const std::string& v : vals) opt->add_result(v);
    opt->run_callback();
  }
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    std::uint64_t seed, const ojson& config,
                    const std::vector<std::pair<std::string, std::string>>&
                        outputs,
                    const std::string& note = "") {
  ojson m;
  m["format_version"] = 1;
  m["tool"] = "vrplab";
  m["tool_version"] = kToolVersion;
  m["subcommand"] = subcommand;
  m["seed"] = seed;
  m["config"] = config;
  m["config_hash"] = fnv64_hex(config.dump());
  m["outputs"] = ojson::array();
  for (const auto& [file, hash] : outputs) {
    ojson o;
    o["file"] = file;
    o["fnv64"] = hash;
    m["outputs"].push_back(o);
  }
  if (!note.empty()) m["note"] = note;
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
  out << m.dump(2) << "\n";
}

// ---- generate ----

struct generate_opts {
  std::string variant = "CVRP", dist = "uniform", suite, out = "out";
  int scale = 50, count = 10;
  std::uint64_t seed = 1;
};

int run_generate(const generate_opts& o) {
  ojson cfg;
  cfg["variant"] = o.variant;
  cfg["scale"] = o.scale;
  cfg["dist"] = o.dist;
  cfg["count"] = o.count;
  cfg["seed"] = o.seed;
  cfg["suite"] = o.suite;
  if (o.scale < 1) throw usage_error("scale must be >= 1");
  if (o.count < 1) throw usage_error("count must be >= 1");

  std::vector<std::pair<std::string, std::string>> outputs;
  if (!o.suite.empty()) {
    suite_manifest sm;
    if (o.suite == "ood")
      sm = build_ood_suite(o.scale, o.count, o.seed, o.out);
    else if (o.suite == "id")
      sm = build_id_suite({o.scale}, o.count, o.seed, o.out);
    else
      throw usage_error("unknown suite '" + o.suite + "' (id|ood)");
    write_suite_manifest(sm, (fs::path(o.out) / "suite.json").string());
    outputs.emplace_back("suite.json",
                         fnv64_hex(file_bytes(
                             (fs::path(o.out) / "suite.json").string())));
    for (const suite_cell& c : sm.cells)
      outputs.emplace_back(
          c.file, fnv64_hex(file_bytes((fs::path(o.out) / c.file).string())));
    std::cout << o.out << "/suite.json: " << sm.cells.size() << " cells, "
              << o.count << " instances each\n";
  } else {
    generator_config gc;
    gc.variant = variant_flags::parse(o.variant);
    gc.scale = o.scale;
    gc.dist = distribution_spec::parse(o.dist);
    gc.seed = o.seed;
    std::vector<problem_instance> set = generate_dataset(gc, o.count);
    std::string file = "dataset.jsonl";
    fs::create_directories(o.out);
    write_dataset(set, (fs::path(o.out) / file).string());
    outputs.emplace_back(
        file, fnv64_hex(file_bytes((fs::path(o.out) / file).string())));
    std::cout << o.out << "/" << file << ": " << set.size() << " instances\n";
  }
  write_manifest(o.out, "generate", o.seed, cfg, outputs);
  return 0;
}

// ---- train ----

struct train_opts {
  std::string preset = "1M", out = "out";
  int layers = 0, heads = 0, kv_dim = 0;  // nonzero = override preset
  double ffn_mult = 0.0;
  int epochs = 1, steps = 100, max_starts = 0;
  double lr = 1e-4, wd = 1e-6, clip = 1.0;
  std::vector<int> scales{50};
  std::vector<std::string> variants{"CVRP"};
  std::vector<std::string> dists{"uniform"};
  std::uint64_t seed = 0;
  bool no_spectral = false;
};

int run_train(const train_opts& o) {
  train_config tc;
  tc.model = preset_config(o.preset);
  if (o.layers > 0) tc.model.layers = o.layers;
  if (o.heads > 0) tc.model.heads = o.heads;
  if (o.kv_dim > 0) tc.model.kv_dim = o.kv_dim;
  if (o.ffn_mult > 0.0) tc.model.ffn_mult = o.ffn_mult;
  if (o.layers > 0 || o.heads > 0 || o.kv_dim > 0 || o.ffn_mult > 0.0)
    tc.model.preset = "";
  tc.model.spectral_norm = !o.no_spectral;
  tc.epochs = o.epochs;
  tc.steps_per_epoch = o.steps;
  tc.lr = o.lr;
  tc.weight_decay = o.wd;
  tc.grad_clip_norm = o.clip;
  tc.scales = o.scales;
  tc.variants.clear();
  for (const std::string& v : o.variants)
    tc.variants.push_back(variant_flags::parse(v));
  tc.distributions.clear();
  for (const std::string& d : o.dists)
    tc.distributions.push_back(distribution_spec::parse(d));
  tc.max_starts = o.max_starts;
  tc.seed = o.seed;
  if (tc.epochs < 1 || tc.steps_per_epoch < 1)
    throw usage_error("epochs and steps must be >= 1");
  if (tc.scales.empty()) throw usage_error("need at least one scale");

  ojson cfg;
  cfg["preset"] = o.preset;
  cfg["layers"] = tc.model.layers;
  cfg["heads"] = tc.model.heads;
  cfg["kv-dim"] = tc.model.kv_dim;
  cfg["ffn-mult"] = tc.model.ffn_mult;
  cfg["spectral"] = tc.model.spectral_norm;
  cfg["epochs"] = tc.epochs;
  cfg["steps"] = tc.steps_per_epoch;
  cfg["lr"] = tc.lr;
  cfg["wd"] = tc.weight_decay;
  cfg["clip"] = tc.grad_clip_norm;
  cfg["scales"] = tc.scales;
  cfg["variants"] = o.variants;
  cfg["dists"] = o.dists;
  cfg["max-starts"] = tc.max_starts;
  cfg["seed"] = tc.seed;

  fs::create_directories(o.out);
  std::ofstream csv(fs::path(o.out) / "metrics.csv", std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write metrics.csv in " + o.out);
  train_result res = train(tc, &csv);
  csv.close();
  std::string stem = (fs::path(o.out) / "checkpoint").string();
  save_checkpoint(res.params, stem);

  std::vector<std::pair<std::string, std::string>> outputs;
  for (const char* f : {"metrics.csv", "checkpoint.json", "checkpoint.bin"})
    outputs.emplace_back(f,
                         fnv64_hex(file_bytes((fs::path(o.out) / f).string())));
  write_manifest(o.out, "train", o.seed, cfg, outputs);
  std::cout << o.out << "/checkpoint: " << param_count(tc.model)
            << " params, " << res.log.size() << " steps, final mean_obj "
            << (res.log.empty() ? 0.0 : res.log.back().mean_obj) << "\n";
  return 0;
}

// ---- eval ----

struct eval_opts_cli {
  std::string dataset, checkpoint, preset = "1M", reference = "heuristic";
  std::string suite = "custom", out = "out", save_reference, save_solutions;
  int m = 10;
  bool aug = false;
  std::uint64_t init_seed = 0;
};

int run_eval(const eval_opts_cli& o) {
  if (o.dataset.empty()) throw usage_error("--dataset is required");
  std::vector<problem_instance> set = read_dataset(o.dataset);
  if (set.empty()) throw std::runtime_error("dataset is empty");

  policy_params params;
  if (!o.checkpoint.empty()) {
    params = load_checkpoint(o.checkpoint);
  } else {
    // untrained baseline: fresh spectral-normalized init
    params = init_params(preset_config(o.preset), o.init_seed);
    if (params.cfg.spectral_norm) spectral_normalize(params, 30);
  }

  eval_options eo;
  eo.m = o.m;
  eo.aug = o.aug;
  eo.suite = o.suite;
  if (o.reference == "heuristic") {
    eo.ref = eval_options::ref_kind::heuristic;
  } else if (o.reference == "exact") {
    eo.ref = eval_options::ref_kind::exact;
  } else {
    eo.ref = eval_options::ref_kind::file;
    eo.ref_path = o.reference;
  }

  std::vector<instance_result> per_instance;
  std::vector<gap_row> rows = evaluate(params, set, eo, &per_instance);
  fs::create_directories(o.out);
  std::string gaps = (fs::path(o.out) / "gaps.csv").string();
  write_gap_csv(rows, gaps);

  std::vector<std::pair<std::string, std::string>> outputs;
  {
    // deterministic hash: timing column zeroed
    std::vector<gap_row> zeroed = rows;
    for (gap_row& r : zeroed) r.sec_per_instance = 0.0;
    std::string tmp = gaps + ".tmp";
    write_gap_csv(zeroed, tmp);
    outputs.emplace_back("gaps.csv", fnv64_hex(file_bytes(tmp)));
    fs::remove(tmp);
  }
  if (!o.save_solutions.empty()) {
    std::ofstream sol(o.save_solutions, std::ios::trunc);
    if (!sol) throw std::runtime_error("cannot open " + o.save_solutions);
    for (std::size_t i = 0; i < set.size(); ++i)
      sol << to_json(make_solution(set[i], per_instance[i].tour)) << "\n";
    sol.close();
    outputs.emplace_back(o.save_solutions,
                         fnv64_hex(file_bytes(o.save_solutions)));
  }
  if (!o.save_reference.empty()) {
    write_reference(per_instance, o.save_reference);
    outputs.emplace_back(o.save_reference,
                         fnv64_hex(file_bytes(o.save_reference)));
  }

  ojson cfg;
  cfg["dataset"] = o.dataset;
  cfg["checkpoint"] = o.checkpoint;
  cfg["preset"] = o.checkpoint.empty() ? o.preset : std::string();
  cfg["m"] = o.m;
  cfg["aug"] = o.aug;
  cfg["reference"] = o.reference;
  cfg["suite"] = o.suite;
  write_manifest(o.out, "eval", o.init_seed, cfg, outputs,
                 "gaps.csv hashed with sec_per_instance zeroed");

  double mean_gap = 0.0;
  for (const gap_row& r : rows) mean_gap += r.gap_pct;
  mean_gap /= static_cast<double>(rows.size());
  std::cout << gaps << ": " << rows.size() << " cells, mean gap "
            << mean_gap << "%\n";
  return 0;
}

// ---- validate ----

int run_validate(const std::string& dataset, const std::string& solutions) {
  std::vector<problem_instance> set = read_dataset(dataset);
  // round-trip every instance through the serializer as a consistency check
  for (std::size_t i = 0; i < set.size(); ++i) {
    problem_instance back = instance_from_json(to_json(set[i]));
    if (instance_hash(back) != instance_hash(set[i]))
      throw std::runtime_error("instance " + std::to_string(i) +
                               ": serialization round-trip changed the hash");
  }
  std::size_t checked = 0;
  if (!solutions.empty()) {
    std::unordered_map<std::string, std::size_t> by_hash;
    for (std::size_t i = 0; i < set.size(); ++i)
      by_hash.emplace(instance_hash(set[i]), i);
    std::ifstream in(solutions);
    if (!in) throw std::runtime_error("cannot open " + solutions);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      solution_doc doc = solution_from_json(line);
      auto it = by_hash.find(doc.instance_hash);
      if (it == by_hash.end())
        throw std::runtime_error(solutions + ":" + std::to_string(lineno) +
                                 ": hash matches no instance");
      validation_result v = validate_solution(set[it->second], doc.tour);
      if (!v.feasible)
        throw std::runtime_error(solutions + ":" + std::to_string(lineno) +
                                 ": infeasible tour: " + v.reason);
      if (std::abs(v.objective - doc.objective) > 1e-6)
        throw std::runtime_error(solutions + ":" + std::to_string(lineno) +
                                 ": stored objective disagrees with the tour");
      ++checked;
    }
  }
  std::cout << "ok: " << set.size() << " instances";
  if (!solutions.empty()) std::cout << ", " << checked << " solutions";
  std::cout << "\n";
  return 0;
}

// ---- fit ----

int run_fit(const std::string& law, const std::string& in,
            const std::string& out) {
  if (law != "N" && law != "T" && law != "C")
    throw usage_error("--law must be one of N, T, C");
  std::vector<series_point> points = read_series_csv(in);
  std::vector<power_law_fit> fits = fit_all(points);
  fs::create_directories(out);
  std::string fits_csv = (fs::path(out) / "fits.csv").string();
  std::string plot_csv = (fs::path(out) / "plot.csv").string();
  write_fits_csv(fits, law, fits_csv);
  write_plot_csv(points, fits, plot_csv);

  ojson cfg;
  cfg["law"] = law;
  cfg["in"] = in;
  std::vector<std::pair<std::string, std::string>> outputs{
      {"fits.csv", fnv64_hex(file_bytes(fits_csv))},
      {"plot.csv", fnv64_hex(file_bytes(plot_csv))}};
  write_manifest(out, "fit", 0, cfg, outputs);

  std::cout << fits_csv << ": " << fits.size() << " series, mean a_" << law
            << " = " << mean_exponent(fits) << "\n";
  return 0;
}

// ---- flops ----

int run_flops(const std::string& preset, int scale, int m, bool aug) {
  model_config cfg = preset_config(preset);
  if (scale < 1 || m < 1) throw usage_error("scale and m must be >= 1");
  std::cout << std::setprecision(12) << flops_estimate(cfg, scale, m, aug)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vrplab: a desk-scale lab for multi-task neural vehicle "
               "routing"};
  app.require_subcommand(1);

  generate_opts g;
  std::string g_config;
  CLI::App* gen = app.add_subcommand("generate", "generate instance datasets");
  gen->add_option("--config", g_config, "JSON config file");
  gen->add_option("--variant", g.variant, "variant name, e.g. CVRP, OVRPBLTW");
  gen->add_option("--scale", g.scale, "customers per instance");
  gen->add_option("--dist", g.dist,
                  "uniform | gm<m>x<c> | explosion | implosion | rotation | "
                  "linear_projection | expansion | grid");
  gen->add_option("--count", g.count, "instances (per cell for suites)");
  gen->add_option("--seed", g.seed, "master seed");
  gen->add_option("--suite", g.suite, "id | ood: write a full suite instead");
  gen->add_option("--out", g.out, "output directory");

  train_opts t;
  std::string t_config;
  CLI::App* trn = app.add_subcommand("train", "REINFORCE multi-start training");
  trn->add_option("--config", t_config, "JSON config file");
  trn->add_option("--preset", t.preset, "1M | 5M | 40M | 1B");
  trn->add_option("--layers", t.layers, "override preset layer count");
  trn->add_option("--heads", t.heads, "override preset head count");
  trn->add_option("--kv-dim", t.kv_dim, "override preset key/value dim");
  trn->add_option("--ffn-mult", t.ffn_mult, "override preset FFN multiplier");
  trn->add_option("--epochs", t.epochs, "epochs");
  trn->add_option("--steps", t.steps, "steps per epoch");
  trn->add_option("--lr", t.lr, "learning rate");
  trn->add_option("--wd", t.wd, "decoupled weight decay");
  trn->add_option("--clip", t.clip, "global gradient-norm clip");
  trn->add_option("--scales", t.scales, "training scales (customers)");
  trn->add_option("--variants", t.variants, "training variants");
  trn->add_option("--dists", t.dists, "training distributions");
  trn->add_option("--max-starts", t.max_starts,
                  "cap on multi-start rollouts per instance (0 = all)");
  trn->add_option("--seed", t.seed, "master seed");
  trn->add_flag("--no-spectral", t.no_spectral,
                "disable spectral normalization");
  trn->add_option("--out", t.out, "output directory");

  eval_opts_cli e;
  std::string e_config;
  CLI::App* evl = app.add_subcommand("eval", "gap evaluation vs a reference");
  evl->add_option("--config", e_config, "JSON config file");
  evl->add_option("--dataset", e.dataset, "JSONL dataset file");
  evl->add_option("--checkpoint", e.checkpoint,
                  "checkpoint stem (expects .json + .bin)");
  evl->add_option("--preset", e.preset,
                  "untrained fallback preset when no checkpoint is given");
  evl->add_option("--init-seed", e.init_seed, "seed for the untrained fallback");
  evl->add_option("--m", e.m, "multi-start width");
  evl->add_flag("--aug", e.aug, "evaluate all 8 unit-square symmetries");
  evl->add_option("--reference", e.reference,
                  "heuristic | exact | path to a reference JSONL");
  evl->add_option("--suite", e.suite, "suite label for the report");
  evl->add_option("--save-reference", e.save_reference,
                  "also write the reference solutions as JSONL");
  evl->add_option("--save-solutions", e.save_solutions,
                  "also write the best policy tours as JSONL");
  evl->add_option("--out", e.out, "output directory");

  std::string v_dataset, v_solutions;
  CLI::App* val = app.add_subcommand("validate",
                                     "check datasets and solution files");
  val->add_option("--dataset", v_dataset, "JSONL dataset file")->required();
  val->add_option("--solutions", v_solutions, "JSONL solutions to check");

  std::string f_law, f_in, f_out = "out";
  CLI::App* fit = app.add_subcommand("fit", "power-law fits from a gap table");
  fit->add_option("--law", f_law, "N | T | C")->required();
  fit->add_option("--in", f_in, "CSV with header x,gap,label")->required();
  fit->add_option("--out", f_out, "output directory");

  std::string fl_preset = "1M";
  int fl_scale = 100, fl_m = 10;
  bool fl_aug = false;
  CLI::App* flp = app.add_subcommand("flops", "per-instance GFLOPs estimate");
  flp->add_option("--preset", fl_preset, "1M | 5M | 40M | 1B");
  flp->add_option("--scale", fl_scale, "customers");
  flp->add_option("--m", fl_m, "multi-start width");
  flp->add_flag("--aug", fl_aug, "x8 augmentation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) return app.exit(ex);  // --help
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }

  try {
    if (*gen) {
      if (!g_config.empty()) apply_config_file(gen, g_config);
      return run_generate(g);
    }
    if (*trn) {
      if (!t_config.empty()) apply_config_file(trn, t_config);
      return run_train(t);
    }
    if (*evl) {
      if (!e_config.empty()) apply_config_file(evl, e_config);
      return run_eval(e);
    }
    if (*val) return run_validate(v_dataset, v_solutions);
    if (*fit) return run_fit(f_law, f_in, f_out);
    if (*flp) return run_flops(fl_preset, fl_scale, fl_m, fl_aug);
  } catch (const usage_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
