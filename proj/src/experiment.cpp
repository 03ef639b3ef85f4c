#include "rescal/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rescal/errors.hpp"

namespace rescal {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  return value;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (depths.empty() && edge_lists.empty()) throw InvalidInput("experiment needs at least one depth or edge_list");
  if (dims.empty()) throw InvalidInput("experiment needs at least one dim");
  if (modes.empty()) throw InvalidInput("experiment needs at least one mode");
  if (repetitions == 0) throw InvalidInput("repetitions must be at least 1");
  if (complement_cap == 0) throw InvalidInput("ec_cap must be positive");
  for (std::size_t d : dims)
    if (d == 0) throw InvalidInput("dim must be positive");
  TrainConfig probe = train;
  for (TrainMode m : modes) {
    probe.mode = m;
    probe.dim = dims.front();
    probe.validate();
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (std::size_t d : depths) out << "depth=" << d << '\n';
  for (const auto& p : edge_lists) out << "edge_list=" << p.generic_string() << '\n';
  for (std::size_t d : dims) out << "dim=" << d << '\n';
  for (TrainMode m : modes) out << "mode=" << to_string(m) << '\n';
  out << "repetitions=" << repetitions << '\n' << "seed=" << seed << '\n';
  // Training settings minus the per-run keys.
  std::istringstream train_text(train.to_text());
  std::string line;
  while (std::getline(train_text, line)) {
    if (line.starts_with("dim=") || line.starts_with("mode=") || line.starts_with("seed=")) continue;
    out << line << '\n';
  }
  out << "ec_cap=" << complement_cap << '\n';
  return out.str();
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_text()); }

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected key=value");
    const std::string_view key = trim(view.substr(0, eq));
    const std::string_view value = trim(view.substr(eq + 1));
    if (value.empty()) throw ParseError(lineno, "empty value for '" + std::string(key) + "'");
    const bool list_key = key == "depth" || key == "edge_list" || key == "dim" || key == "mode";
    if (!list_key && !seen.emplace(key).second) throw ParseError(lineno, "repeated key '" + std::string(key) + "'");
    try {
      if (key == "depth") cfg.depths.push_back(parse_number<std::size_t>(key, value));
      else if (key == "edge_list") cfg.edge_lists.emplace_back(std::string(value));
      else if (key == "dim") cfg.dims.push_back(parse_number<std::size_t>(key, value));
      else if (key == "mode") cfg.modes.push_back(parse_train_mode(value));
      else if (key == "repetitions") cfg.repetitions = parse_number<std::size_t>(key, value);
      else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
      else if (key == "out") cfg.out_dir = std::string(value);
      else if (key == "ec_cap") cfg.complement_cap = parse_number<std::size_t>(key, value);
      else if (key == "threads") cfg.threads = parse_number<unsigned>(key, value);
      else if (!apply_train_setting(cfg.train, key, value))
        throw ParseError(lineno, "unknown key '" + std::string(key) + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_experiment_config(in);
}

GraphSource tree_source(std::size_t depth, unsigned threads) {
  DirectedGraph tree = build_complete_binary_tree(depth);
  const std::size_t base = tree.num_edges();
  return {"tree-depth-" + std::to_string(depth), EdgePartitions(transitive_closure(tree, threads)), base};
}

GraphSource edge_list_source(const std::filesystem::path& path, unsigned threads) {
  IngestedGraph g = ingest_edge_list(path);
  const std::size_t base = g.graph.num_edges();
  return {path.filename().string(), EdgePartitions(transitive_closure(g.graph, threads)), base};
}

std::string format_report(const EvalReport& report, const std::string& config_hash, const std::string& source,
                          std::size_t dim, const std::string& mode) {
  std::ostringstream out;
  out.precision(17);
  out << "config_hash=" << config_hash << '\n'
      << "seed=" << report.seed << '\n'
      << "source=" << source << '\n'
      << "mode=" << mode << '\n'
      << "dim=" << dim << '\n'
      << "size_E=" << report.size_e << '\n'
      << "size_Ec=" << report.size_ec << '\n'
      << "size_Erev=" << report.size_erev << '\n'
      << "Ec_sampled=" << (report.ec_sampled ? "true" : "false") << '\n'
      << "acc_E=" << report.acc_e << '\n'
      << "acc_Ec=" << report.acc_ec << '\n'
      << "acc_Erev=" << report.acc_erev << '\n'
      << "config=" << report.config << '\n';
  return out.str();
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const std::string hash = cfg.hash();
  const std::filesystem::path runs_dir = cfg.out_dir / "runs";
  std::filesystem::create_directories(runs_dir);
  write_file(cfg.out_dir / "config.txt", "# config_hash=" + hash + "\n" + cfg.to_text());

  std::vector<GraphSource> sources;
  for (std::size_t depth : cfg.depths) sources.push_back(tree_source(depth, cfg.threads));
  for (const auto& path : cfg.edge_lists) sources.push_back(edge_list_source(path, cfg.threads));
  std::vector<std::size_t> sizes;
  for (const GraphSource& s : sources) {
    if (std::find(sizes.begin(), sizes.end(), s.partitions.num_vertices()) != sizes.end())
      throw InvalidInput("two graph sources share V = " + std::to_string(s.partitions.num_vertices()));
    sizes.push_back(s.partitions.num_vertices());
  }
  std::vector<std::string> mode_names;
  for (TrainMode m : cfg.modes) mode_names.push_back(to_string(m));

  ExperimentOutcome outcome;
  for (TrainMode mode : cfg.modes) {
    for (std::size_t dim : cfg.dims) {
      for (const GraphSource& source : sources) {
        const std::size_t v = source.partitions.num_vertices();
        TableCell cell{to_string(mode), v, dim, std::nullopt, false};
        std::vector<EvalReport> reports;
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
          TrainConfig tc = cfg.train;
          tc.mode = mode;
          tc.dim = dim;
          tc.seed = cfg.seed + rep;
          const std::string stem =
              to_string(mode) + "_V" + std::to_string(v) + "_d" + std::to_string(dim) + "_seed" + std::to_string(tc.seed);
          log << "[run] " << source.label << " mode=" << to_string(mode) << " d=" << dim << " seed=" << tc.seed
              << '\n';
          try {
            TrainResult result = train(source.partitions, tc, [&](std::size_t step, double loss) {
              log << "  step " << step << " loss " << loss << '\n';
            });
            if (!result.model.all_finite()) throw NumericalError("training produced non-finite parameters");
            result.model.provenance = "config_hash=" + hash + " seed=" + std::to_string(tc.seed) + "\n" + tc.to_text();
            EvalOptions opts;
            opts.complement_cap = cfg.complement_cap;
            opts.sample_seed = tc.seed;
            opts.threads = cfg.threads;
            EvalReport report = evaluate_all(result.model, source.partitions, opts);
            report.seed = tc.seed;
            std::string config_line = tc.to_text();
            std::replace(config_line.begin(), config_line.end(), '\n', ' ');
            if (!config_line.empty()) config_line.pop_back();
            report.config = config_line;
            save_model(runs_dir / (stem + ".model"), result.model);
            write_file(runs_dir / (stem + ".report"), format_report(report, hash, source.label, dim, to_string(mode)));
            log << "  acc E=" << 100 * report.acc_e << " Ec=" << 100 * report.acc_ec
                << " Erev=" << 100 * report.acc_erev << (report.ec_sampled ? " (Ec sampled)" : "") << '\n';
            reports.push_back(std::move(report));
          } catch (const std::exception& e) {
            log << "[warn] run failed: " << e.what() << '\n';
            cell.failed = true;
            outcome.all_ok = false;
          }
        }
        if (!cell.failed) cell.summary = aggregate_runs(std::move(reports));
        outcome.cells.push_back(std::move(cell));
      }
    }
  }

  std::string csv = "# config_hash=" + hash + "\n# seed=" + std::to_string(cfg.seed) +
                    "\n# repetitions=" + std::to_string(cfg.repetitions) + "\n";
  csv += render_table(outcome.cells, mode_names, cfg.dims, sizes);
  write_file(cfg.out_dir / "results.csv", csv);
  outcome.csv = std::move(csv);
  return outcome;
}

}  // namespace rescal
