// tw-lab: batch driver for the two-weight laboratory.
//
// Subcommands:
//   constants    compute the extremal constants of every seeded instance
//   verify       run the identity / invariant suites, nonzero exit on failure
//   decompose    emit the stopping-time trace and form ledger of one (f, g)
//   gen-measure  write a generated doubling measure as JSON

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "twlab/lab.hpp"

namespace fs = std::filesystem;
using namespace twlab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path);
  if (!f) throw config_error("cannot write " + path.string());
  f << text;
}

int worker_count(int requested) {
  if (const char* e = std::getenv("TW_LAB_THREADS")) return std::max(1, std::atoi(e));
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  bool no_timestamp = false;
  int parallel = 0;
};

ExperimentConfig load_config(const CommonOpts& o) {
  ExperimentConfig cfg = ExperimentConfig::from_json(slurp(o.config_path));
  if (o.has_seed) cfg.seeds = {o.seed_override};
  if (o.parallel > 0) cfg.threads = o.parallel;
  return cfg;
}

int cmd_constants(const CommonOpts& o) {
  const ExperimentConfig cfg = load_config(o);
  std::vector<ConstantsReport> reports(cfg.seeds.size());

  // seeds dispatched to a small worker pool; output written by one thread
  const int workers =
      std::min<int>(worker_count(cfg.threads), static_cast<int>(cfg.seeds.size()));
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < cfg.seeds.size(); i = next.fetch_add(1))
        reports[i] = compute_constants(cfg.instance(cfg.seeds[i]));
    });
  for (auto& th : pool) th.join();

  const fs::path out(o.out_dir);
  std::ostringstream csv;
  ConstantsReport::write_csv_header(csv);
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  std::vector<double> ratios;
  for (const auto& rep : reports) {
    spit(out / ("constants_seed" + std::to_string(rep.seed) + ".json"),
         rep.to_json(!o.no_timestamp));
    rep.write_csv_row(csv);
    const double den = std::sqrt(rep.a2.value) + rep.testing.value + rep.testing_dual.value;
    if (den > 0.0) {
      ratios.push_back(rep.norm / den);
      rmin = std::min(rmin, ratios.back());
      rmax = std::max(rmax, ratios.back());
    }
  }
  spit(out / "constants.csv", csv.str());
  nlohmann::json agg;
  agg["instances"] = reports.size();
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    agg["norm_over_sum_ratio"] = {{"min", rmin},
                                  {"median", ratios[ratios.size() / 2]},
                                  {"max", rmax}};
  }
  spit(out / "aggregate.json", agg.dump(2));
  std::cout << "wrote " << reports.size() << " reports to " << out << "\n";
  return 0;
}

int cmd_verify(const CommonOpts& o, bool inject_fault) {
  const ExperimentConfig cfg = load_config(o);
  bool all_ok = true;
  const fs::path out(o.out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    const VerificationReport rep = run_verification(cfg.instance(seed), inject_fault);
    for (const auto& row : rep.rows) {
      std::cout << (row.pass ? "  ok " : "FAIL ") << row.name << " = " << row.value;
      if (row.tol > 0.0) std::cout << " (tol " << row.tol << ")";
      std::cout << "\n";
      if (!row.pass) all_ok = false;
    }
    spit(out / ("verify_seed" + std::to_string(seed) + ".json"), rep.to_json(!o.no_timestamp));
  }
  std::cout << (all_ok ? "all identities hold\n" : "identity failure detected\n");
  return all_ok ? 0 : 1;
}

int cmd_decompose(const CommonOpts& o, const std::string& f_file, const std::string& g_file) {
  const ExperimentConfig cfg = load_config(o);
  const Instance in = cfg.instance(cfg.seeds.front());
  const Grid g = cfg.grid();
  const auto f = load_function_json(slurp(f_file), g);
  const auto gx = load_function_json(slurp(g_file), g);
  const DecompositionTrace tr = run_decomposition(in, f, gx);
  const fs::path out(o.out_dir);
  spit(out / "decomposition.json", tr.to_json(!o.no_timestamp));
  std::cout << "stops " << tr.tree.stops().size() << ", generations "
            << tr.tree.generations() << ", deep pairs " << tr.ledger.size.below_pairs << "\n";
  return 0;
}

int cmd_gen_measure(const CommonOpts& o, int dim, int depth, double beta, double side,
                    const std::string& out_file) {
  Grid g(dim, depth, {0.0, 0.0}, side);
  const Measure mu = random_doubling(g, beta, o.has_seed ? o.seed_override : 1);
  spit(out_file, mu.to_json(2));
  const auto st = doubling_stats(mu);
  std::cout << "wrote " << out_file << " (doubling constant " << st.c_doub << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-weight singular integral laboratory"};
  app.require_subcommand(1);
  CommonOpts opts;

  const auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", opts.config_path, "experiment config (JSON)");
    if (need_config) c->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed_override, "override the config seed list")
        ->each([&](const std::string&) { opts.has_seed = true; });
    sub->add_flag("--no-timestamp", opts.no_timestamp, "omit timestamps for byte-stable output");
    sub->add_option("--parallel", opts.parallel, "worker count (TW_LAB_THREADS overrides)");
  };

  auto* constants = app.add_subcommand("constants", "compute extremal constants per seed");
  add_common(constants, true);

  auto* verify = app.add_subcommand("verify", "run identity and invariant suites");
  add_common(verify, true);
  bool inject_fault = false;
  verify->add_flag("--inject-fault", inject_fault,
                   "corrupt one basis vector first (failure-path check)");

  auto* decompose = app.add_subcommand("decompose", "corona trace and form ledger of (f, g)");
  add_common(decompose, true);
  std::string f_file, g_file;
  decompose->add_option("--f", f_file, "leaf values of f (JSON)")->required();
  decompose->add_option("--g", g_file, "leaf values of g (JSON)")->required();

  auto* gen = app.add_subcommand("gen-measure", "generate a doubling measure");
  add_common(gen, false);
  int dim = 1, depth = 8;
  double beta = 0.3, side = 1.0;
  std::string out_file = "measure.json";
  gen->add_option("--dim", dim, "dimension (1 or 2)");
  gen->add_option("--depth", depth, "tree depth");
  gen->add_option("--beta", beta, "minimum child mass fraction");
  gen->add_option("--side", side, "root side length");
  gen->add_option("--measure-out", out_file, "output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (constants->parsed()) return cmd_constants(opts);
    if (verify->parsed()) return cmd_verify(opts, inject_fault);
    if (decompose->parsed()) return cmd_decompose(opts, f_file, g_file);
    if (gen->parsed()) return cmd_gen_measure(opts, dim, depth, beta, side, out_file);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
