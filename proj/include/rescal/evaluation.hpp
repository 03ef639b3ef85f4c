#pragma once

// 0-1 evaluation of trained models on E, E^c and E^rev, aggregation over
// repeated runs, and the CSV / terminal tables.

#include <cstddef>
#include <cstdint>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rescal/graph.hpp"
#include "rescal/model.hpp"

namespace rescal {

/// Fraction of `pairs` for which classify_pair equals `expected`.
/// Throws std::invalid_argument on an empty set.
double accuracy(const RescalModel& model, std::span<const Edge> pairs, bool expected);

struct EvalOptions {
  /// E^c is scored exactly up to this many pairs, otherwise a uniform sample
  /// of this size is scored and the report is marked as sampled.
  std::size_t complement_cap = 10'000'000;
  std::uint64_t sample_seed = 0;
  unsigned threads = 1;
};

struct EvalReport {
  double acc_e = 0;
  double acc_ec = 0;
  double acc_erev = 0;
  std::size_t size_e = 0;
  std::size_t size_ec = 0;    // pairs actually scored
  std::size_t size_erev = 0;
  bool ec_sampled = false;
  std::uint64_t seed = 0;
  std::string config;  // echo of the training configuration

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Counts of correct decisions per set; exposed so parallel and sequential
/// evaluation can be compared exactly.
struct EvalCounts {
  std::size_t correct_e = 0, total_e = 0;
  std::size_t correct_ec = 0, total_ec = 0;
  std::size_t correct_erev = 0, total_erev = 0;

  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

EvalCounts evaluate_counts(const RescalModel& model, const EdgePartitions& parts, const EvalOptions& options = {});

/// Accuracies with expected labels true on E, false on E^c and E^rev.
EvalReport evaluate_all(const RescalModel& model, const EdgePartitions& parts, const EvalOptions& options = {});

struct AccuracyStats {
  double mean = 0;
  double stddev = 0;  // sample standard deviation, 0 for a single run
};

struct RunSummary {
  std::vector<EvalReport> reports;
  AccuracyStats e, ec, erev;
};

RunSummary aggregate_runs(std::vector<EvalReport> reports);

/// One table cell: a (mode, V, d) configuration and its outcome.
struct TableCell {
  std::string mode;
  std::size_t num_vertices = 0;
  std::size_t dim = 0;
  std::optional<RunSummary> summary;  // empty: missing or failed
  bool failed = false;
};

inline constexpr const char* kCsvHeader =
    "mode,V,d,seed_count,acc_E_mean,acc_E_std,acc_Ec_mean,acc_Ec_std,acc_Erev_mean,acc_Erev_std";
inline constexpr const char* kMissingCell = "NA";
inline constexpr const char* kFailedCell = "FAILED";

/// CSV in table order: rows by d over `dims`, then V over `sizes`, within
/// each mode in the order given. Percentages with one decimal. Cells absent
/// from `cells` are written with the missing marker.
std::string render_table(std::span<const TableCell> cells, std::span<const std::string> modes,
                         std::span<const std::size_t> dims, std::span<const std::size_t> sizes);

struct CsvRow {
  std::string mode;
  std::size_t num_vertices = 0;
  std::size_t dim = 0;
  std::size_t seed_count = 0;
  std::string status;  // "ok", kMissingCell or kFailedCell
  /// Percentages: E mean/std, E^c mean/std, E^rev mean/std.
  std::optional<std::array<double, 6>> values;
};

/// Parses render_table output. Lines starting with '#' are skipped.
std::vector<CsvRow> parse_table(std::string_view csv);

/// Terminal layout: one block per mode, d down the side, V across, each
/// cell the rounded "E Ec Erev" percentage triple.
std::string render_pretty(std::span<const CsvRow> rows);

}  // namespace rescal
