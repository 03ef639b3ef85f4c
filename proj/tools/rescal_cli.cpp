// rescal: generate graphs, run training sweeps, evaluate models, check
// relation matrices for transitivity violations, and print result tables.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "rescal/errors.hpp"
#include "rescal/evaluation.hpp"
#include "rescal/experiment.hpp"
#include "rescal/graph.hpp"
#include "rescal/matrix_theory.hpp"
#include "rescal/model.hpp"

namespace fs = std::filesystem;
using namespace rescal;

namespace {

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

int cmd_gen_tree(std::size_t depth, const fs::path& out, unsigned threads) {
  GraphSource src = tree_source(depth, threads);
  const EdgePartitions& p = src.partitions;
  export_edge_list(out, p.graph(), Vocab::numeric(p.num_vertices()));
  std::cout << "V=" << p.num_vertices() << '\n'
            << "|E|=" << p.positives().size() << '\n'
            << "|E^c|=" << p.complement_size() << '\n';
  return 0;
}

int cmd_run(const fs::path& config, const std::optional<fs::path>& out, const std::optional<std::uint64_t>& seed,
            bool deterministic) {
  ExperimentConfig cfg = load_experiment_config(config);
  if (out) cfg.out_dir = *out;
  if (seed) cfg.seed = *seed;
  if (deterministic) cfg.threads = 1;
  ExperimentOutcome outcome = run_experiment(cfg, std::cerr);
  std::cout << outcome.csv;
  if (!outcome.all_ok) std::cerr << "one or more cells failed\n";
  return outcome.all_ok ? 0 : 1;
}

int cmd_eval(const fs::path& model_path, const std::optional<std::size_t>& depth,
             const std::optional<fs::path>& edges, std::size_t cap, std::uint64_t seed, unsigned threads) {
  RescalModel model = load_model(model_path);
  GraphSource src = depth ? tree_source(*depth, threads) : edge_list_source(*edges, threads);
  EvalOptions opts;
  opts.complement_cap = cap;
  opts.sample_seed = seed;
  opts.threads = threads;
  EvalReport report = evaluate_all(model, src.partitions, opts);
  report.config = model.provenance;
  std::cout.precision(17);
  std::cout << "source=" << src.label << '\n'
            << "size_E=" << report.size_e << '\n'
            << "size_Ec=" << report.size_ec << '\n'
            << "size_Erev=" << report.size_erev << '\n'
            << "Ec_sampled=" << (report.ec_sampled ? "true" : "false") << '\n'
            << "acc_E=" << report.acc_e << '\n'
            << "acc_Ec=" << report.acc_ec << '\n'
            << "acc_Erev=" << report.acc_erev << '\n';
  return 0;
}

int cmd_check_matrix(const std::optional<fs::path>& matrix_path, const std::optional<fs::path>& model_path,
                     std::size_t samples, double tol, std::uint64_t seed) {
  Matrix m;
  if (matrix_path) {
    std::ifstream in(*matrix_path);
    if (!in) throw std::runtime_error("cannot open " + matrix_path->string());
    m = read_matrix_text(in);
  } else {
    m = load_model(*model_path).difference_matrix();
  }
  if (m.rows() != m.cols()) throw InvalidInput("matrix is not square");

  std::cout.precision(17);
  const double defect = symmetry_defect(m);
  std::cout << "dimension: " << m.rows() << '\n' << "symmetry_defect: " << defect << '\n';

  bool ok = true;
  auto sampled = sampled_transitivity_check(m, samples, tol, seed);
  if (sampled) {
    const bool verified = verify_witness(m, *sampled, tol);
    ok = ok && verified;
    std::cout << "sampled_check: violation found in " << samples << " triples"
              << (verified ? "" : " (re-verification FAILED)") << '\n';
  } else {
    std::cout << "sampled_check: no violation in " << samples << " triples\n";
  }

  if (defect <= tol) {
    std::cout << "witness: not attempted (matrix is symmetric within tolerance)\n";
    return ok ? 0 : 1;
  }
  try {
    WitnessResult w = find_transitivity_violation(m, tol, seed);
    const bool verified = verify_witness(m, w.triple, tol);
    ok = ok && verified;
    std::cout << "witness_route: " << to_string(w.route) << '\n'
              << "witness_verified: " << (verified ? "true" : "false") << '\n';
    write_witness(std::cout, w.triple);
  } catch (const NumericalError& e) {
    std::cerr << "witness search failed: " << e.what() << '\n';
    std::cout << "witness: search failed\n";
    ok = false;
  }
  return ok ? 0 : 1;
}

int cmd_report(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::cout << render_pretty(parse_table(buf.str()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RESCAL link prediction on transitive hierarchies"};
  app.require_subcommand(1);

  std::size_t depth = 0;
  fs::path out;
  auto* gen = app.add_subcommand("gen-tree", "Write the closed complete binary tree as an edge list");
  gen->add_option("--depth", depth, "Tree depth (V = 2^depth - 1)")->required();
  gen->add_option("--out", out, "Output edge-list path")->required();

  fs::path config;
  std::optional<fs::path> run_out;
  std::optional<std::uint64_t> run_seed;
  bool deterministic = false;
  auto* run = app.add_subcommand("run", "Run a training and evaluation sweep");
  run->add_option("--config", config, "Experiment config (key=value lines)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (overrides the config)");
  run->add_option("--seed", run_seed, "Seed base (overrides the config)");
  run->add_flag("--deterministic", deterministic, "Single-threaded execution");

  fs::path model_path;
  std::optional<std::size_t> eval_depth;
  std::optional<fs::path> eval_edges;
  std::size_t cap = 10'000'000;
  std::uint64_t eval_seed = 0;
  bool eval_deterministic = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on E, E^c and E^rev");
  eval->add_option("--model", model_path, "Saved model")->required()->check(CLI::ExistingFile);
  auto* depth_opt = eval->add_option("--depth", eval_depth, "Evaluate on the closed tree of this depth");
  auto* edges_opt = eval->add_option("--edges", eval_edges, "Evaluate on the closure of this edge list");
  depth_opt->excludes(edges_opt);
  eval->add_option("--ec-cap", cap, "Score E^c exactly up to this many pairs, else sample");
  eval->add_option("--seed", eval_seed, "Seed for E^c sampling");
  eval->add_flag("--deterministic", eval_deterministic, "Single-threaded execution");

  std::optional<fs::path> matrix_path;
  std::optional<fs::path> check_model;
  std::size_t samples = 100000;
  double tol = kDefaultTolerance;
  std::uint64_t check_seed = 0;
  auto* check = app.add_subcommand("check-matrix", "Symmetry defect and transitivity witness for a matrix");
  auto* mat_opt = check->add_option("--matrix", matrix_path, "Matrix as whitespace-separated text rows");
  auto* model_opt = check->add_option("--model", check_model, "Saved model; checks M_present - M_absent");
  mat_opt->excludes(model_opt);
  check->add_option("--samples", samples, "Random triples for the sampled check");
  check->add_option("--tol", tol, "Margin for strict inequalities");
  check->add_option("--seed", check_seed, "Seed for sampling and fallbacks");

  fs::path csv_path;
  auto* report = app.add_subcommand("report", "Print a results CSV as a table");
  report->add_option("--csv", csv_path, "results.csv path")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_tree(depth, out, default_threads());
    if (*run) return cmd_run(config, run_out, run_seed, deterministic);
    if (*eval) {
      if (!eval_depth && !eval_edges) throw CLI::RequiredError("--depth or --edges");
      return cmd_eval(model_path, eval_depth, eval_edges, cap, eval_seed,
                      eval_deterministic ? 1u : default_threads());
    }
    if (*check) {
      if (!matrix_path && !check_model) throw CLI::RequiredError("--matrix or --model");
      return cmd_check_matrix(matrix_path, check_model, samples, tol, check_seed);
    }
    if (*report) return cmd_report(csv_path);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
