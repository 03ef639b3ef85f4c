#pragma once

// Sweeps over (graph source, d, mode, seed) cells: train, evaluate, write
// per-run reports and the aggregate CSV.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rescal/evaluation.hpp"
#include "rescal/training.hpp"

namespace rescal {

struct ExperimentConfig {
  std::vector<std::size_t> depths;
  std::vector<std::filesystem::path> edge_lists;
  std::vector<std::size_t> dims;
  std::vector<TrainMode> modes;
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;  // run k of a cell uses seed + k
  TrainConfig train;       // dim, mode and seed are set per run
  std::filesystem::path out_dir = "results";
  std::size_t complement_cap = 10'000'000;
  unsigned threads = 1;

  void validate() const;
  /// Canonical text; identical configs give identical text.
  std::string to_text() const;
  /// FNV-1a 64 of to_text(), as 16 hex digits.
  std::string hash() const;
};

/// Line-oriented key=value, '#' comments. List keys (depth, edge_list, dim,
/// mode) may repeat; every other key may appear once. Training keys are
/// accepted except dim, mode and seed, which are experiment-level. Unknown
/// keys are errors.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// A graph prepared for evaluation, with a label for reports.
struct GraphSource {
  std::string label;
  EdgePartitions partitions;
  std::size_t base_edges = 0;  // edges before closure
};

GraphSource tree_source(std::size_t depth, unsigned threads = 1);
GraphSource edge_list_source(const std::filesystem::path& path, unsigned threads = 1);

struct ExperimentOutcome {
  std::vector<TableCell> cells;
  std::string csv;  // written to out_dir/results.csv
  bool all_ok = true;
};

/// Runs every cell. Progress and warnings go to `log`. A failed run marks
/// its cell failed and the sweep continues.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// key=value text for one run: config hash, seed, sizes and accuracies.
std::string format_report(const EvalReport& report, const std::string& config_hash, const std::string& source,
                          std::size_t dim, const std::string& mode);

}  // namespace rescal
