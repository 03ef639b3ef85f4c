#include "rescal/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "rescal/errors.hpp"

namespace rescal {

double accuracy(const RescalModel& model, std::span<const Edge> pairs, bool expected) {
  if (pairs.empty()) throw std::invalid_argument("accuracy over an empty set is undefined");
  std::size_t correct = 0;
  for (const Edge& e : pairs)
    if (model.classify_pair(e.sub, e.obj) == expected) ++correct;
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

namespace {

constexpr Eigen::Index kRowBlock = 64;

// Scores via the precomputed products P_r = A M_r, so a pair costs O(d).
struct Scorer {
  const Matrix& emb;
  Matrix p1, p0;

  explicit Scorer(const RescalModel& model)
      : emb(model.entities()),
        p1(model.entities() * model.relation(Relation::kPresent)),
        p0(model.entities() * model.relation(Relation::kAbsent)) {}

  bool positive(EntityId u, EntityId v) const { return p1.row(u).dot(emb.row(v)) > p0.row(u).dot(emb.row(v)); }
};

// Splits [0, n) into `threads` contiguous ranges and sums what `work`
// returns for each. Integer counts keep the result thread-count independent.
template <class Work>
EvalCounts parallel_counts(std::size_t n, unsigned threads, Work work) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<EvalCounts> partial(threads);
  if (threads == 1) {
    partial[0] = work(std::size_t{0}, n);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] { partial[t] = work(n * t / threads, n * (t + 1) / threads); });
  }
  EvalCounts total;
  for (const EvalCounts& c : partial) {
    total.correct_e += c.correct_e;
    total.total_e += c.total_e;
    total.correct_ec += c.correct_ec;
    total.total_ec += c.total_ec;
    total.correct_erev += c.correct_erev;
    total.total_erev += c.total_erev;
  }
  return total;
}

// Exact pass over every ordered pair, one block of rows at a time.
EvalCounts exact_counts(const Scorer& scorer, const EdgePartitions& parts, std::size_t first_row,
                        std::size_t last_row) {
  EvalCounts c;
  const auto n = static_cast<Eigen::Index>(parts.num_vertices());
  const auto reversed = parts.reversed();
  for (auto block = static_cast<Eigen::Index>(first_row); block < static_cast<Eigen::Index>(last_row);
       block += kRowBlock) {
    const Eigen::Index rows = std::min<Eigen::Index>(kRowBlock, static_cast<Eigen::Index>(last_row) - block);
    const Matrix s1 = scorer.p1.middleRows(block, rows) * scorer.emb.transpose();
    const Matrix s0 = scorer.p0.middleRows(block, rows) * scorer.emb.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto u = static_cast<EntityId>(block + i);
      auto succ = parts.graph().successors(u);
      auto next_succ = succ.begin();
      auto rev = std::lower_bound(reversed.begin(), reversed.end(), Edge{u, 0});
      for (Eigen::Index v = 0; v < n; ++v) {
        const bool positive = s1(i, v) > s0(i, v);
        const auto w = static_cast<EntityId>(v);
        if (next_succ != succ.end() && *next_succ == w) {
          ++next_succ;
          ++c.total_e;
          c.correct_e += positive;
        } else {
          ++c.total_ec;
          c.correct_ec += !positive;
        }
        if (rev != reversed.end() && rev->sub == u && rev->obj == w) {
          ++rev;
          ++c.total_erev;
          c.correct_erev += !positive;
        }
      }
    }
  }
  return c;
}

}  // namespace

EvalCounts evaluate_counts(const RescalModel& model, const EdgePartitions& parts, const EvalOptions& options) {
  if (model.num_entities() != parts.num_vertices())
    throw std::invalid_argument("model has " + std::to_string(model.num_entities()) + " entities but graph has " +
                                std::to_string(parts.num_vertices()) + " vertices");
  if (model.num_relations() < 2) throw std::invalid_argument("evaluation needs relations r0 and r1");
  const Scorer scorer(model);

  if (parts.complement_size() <= options.complement_cap) {
    return parallel_counts(parts.num_vertices(), options.threads, [&](std::size_t first, std::size_t last) {
      return exact_counts(scorer, parts, first, last);
    });
  }

  const auto positives = parts.positives();
  const auto reversed = parts.reversed();
  const std::vector<Edge> sample = sample_complement(parts, options.complement_cap, options.sample_seed);
  auto listed = [&](std::span<const Edge> edges, bool expected) {
    return parallel_counts(edges.size(), options.threads, [&](std::size_t first, std::size_t last) {
      EvalCounts c;
      for (std::size_t k = first; k < last; ++k)
        c.correct_e += scorer.positive(edges[k].sub, edges[k].obj) == expected;
      c.total_e = last - first;
      return c;
    });
  };
  const EvalCounts e = listed(positives, true);
  const EvalCounts ec = listed(sample, false);
  const EvalCounts erev = listed(reversed, false);
  return {e.correct_e, e.total_e, ec.correct_e, ec.total_e, erev.correct_e, erev.total_e};
}

EvalReport evaluate_all(const RescalModel& model, const EdgePartitions& parts, const EvalOptions& options) {
  const EvalCounts c = evaluate_counts(model, parts, options);
  auto frac = [](std::size_t correct, std::size_t total) {
    if (total == 0) throw std::invalid_argument("evaluation set is empty");
    return static_cast<double>(correct) / static_cast<double>(total);
  };
  EvalReport report;
  report.acc_e = frac(c.correct_e, c.total_e);
  report.acc_ec = frac(c.correct_ec, c.total_ec);
  report.acc_erev = frac(c.correct_erev, c.total_erev);
  report.size_e = c.total_e;
  report.size_ec = c.total_ec;
  report.size_erev = c.total_erev;
  report.ec_sampled = parts.complement_size() > options.complement_cap;
  report.config = model.provenance;
  return report;
}

RunSummary aggregate_runs(std::vector<EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_runs needs at least one report");
  auto stats = [&](double EvalReport::*field) {
    const double n = static_cast<double>(reports.size());
    double sum = 0;
    for (const auto& r : reports) sum += r.*field;
    AccuracyStats s{sum / n, 0.0};
    if (reports.size() > 1) {
      double ss = 0;
      for (const auto& r : reports) ss += (r.*field - s.mean) * (r.*field - s.mean);
      s.stddev = std::sqrt(ss / (n - 1));
    }
    return s;
  };
  RunSummary summary;
  summary.e = stats(&EvalReport::acc_e);
  summary.ec = stats(&EvalReport::acc_ec);
  summary.erev = stats(&EvalReport::acc_erev);
  summary.reports = std::move(reports);
  return summary;
}

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T to_number(std::string_view text, std::size_t lineno) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ParseError(lineno, "bad number '" + std::string(text) + "'");
  return value;
}

}  // namespace

std::string render_table(std::span<const TableCell> cells, std::span<const std::string> modes,
                         std::span<const std::size_t> dims, std::span<const std::size_t> sizes) {
  std::map<std::tuple<std::string, std::size_t, std::size_t>, const TableCell*> index;
  for (const TableCell& cell : cells) {
    const bool on_axes = std::find(modes.begin(), modes.end(), cell.mode) != modes.end() &&
                         std::find(dims.begin(), dims.end(), cell.dim) != dims.end() &&
                         std::find(sizes.begin(), sizes.end(), cell.num_vertices) != sizes.end();
    if (!on_axes) throw std::invalid_argument("table cell lies outside the requested axes");
    index[{cell.mode, cell.num_vertices, cell.dim}] = &cell;
  }

  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const std::string& mode : modes)
    for (std::size_t d : dims)
      for (std::size_t v : sizes) {
        out << mode << ',' << v << ',' << d << ',';
        auto it = index.find({mode, v, d});
        const TableCell* cell = it == index.end() ? nullptr : it->second;
        if (cell && cell->summary && !cell->failed) {
          const RunSummary& s = *cell->summary;
          out << s.reports.size() << ',' << percent(s.e.mean) << ',' << percent(s.e.stddev) << ','
              << percent(s.ec.mean) << ',' << percent(s.ec.stddev) << ',' << percent(s.erev.mean) << ','
              << percent(s.erev.stddev) << '\n';
        } else {
          const char* marker = (cell && cell->failed) ? kFailedCell : kMissingCell;
          out << 0;
          for (int k = 0; k < 6; ++k) out << ',' << marker;
          out << '\n';
        }
      }
  return out.str();
}

std::vector<CsvRow> parse_table(std::string_view csv) {
  std::vector<CsvRow> rows;
  bool header_seen = false;
  std::size_t lineno = 0;
  for (std::string_view line : split(csv, '\n')) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw ParseError(lineno, "unexpected CSV header");
      header_seen = true;
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != 10) throw ParseError(lineno, "expected 10 fields");
    CsvRow row;
    row.mode = std::string(fields[0]);
    row.num_vertices = to_number<std::size_t>(fields[1], lineno);
    row.dim = to_number<std::size_t>(fields[2], lineno);
    row.seed_count = to_number<std::size_t>(fields[3], lineno);
    if (fields[4] == kMissingCell || fields[4] == kFailedCell) {
      row.status = std::string(fields[4]);
    } else {
      row.status = "ok";
      std::array<double, 6> v{};
      for (std::size_t k = 0; k < 6; ++k) v[k] = to_number<double>(fields[4 + k], lineno);
      row.values = v;
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError(lineno, "missing CSV header");
  return rows;
}

std::string render_pretty(std::span<const CsvRow> rows) {
  std::vector<std::string> modes;
  for (const CsvRow& r : rows)
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);

  std::ostringstream out;
  for (const std::string& mode : modes) {
    std::vector<std::size_t> dims, sizes;
    std::map<std::pair<std::size_t, std::size_t>, std::string> text;
    for (const CsvRow& r : rows) {
      if (r.mode != mode) continue;
      if (std::find(dims.begin(), dims.end(), r.dim) == dims.end()) dims.push_back(r.dim);
      if (std::find(sizes.begin(), sizes.end(), r.num_vertices) == sizes.end()) sizes.push_back(r.num_vertices);
      std::string cell = r.status;
      if (r.values) {
        std::ostringstream c;
        c << std::lround((*r.values)[0]) << ' ' << std::lround((*r.values)[2]) << ' ' << std::lround((*r.values)[4]);
        cell = c.str();
      }
      text[{r.dim, r.num_vertices}] = cell;
    }
    out << mode << " (E Ec Erev, %)\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-6s", "d");
    out << buf;
    for (std::size_t v : sizes) {
      std::snprintf(buf, sizeof buf, " | V=%-12zu", v);
      out << buf;
    }
    out << '\n';
    for (std::size_t d : dims) {
      std::snprintf(buf, sizeof buf, "%-6zu", d);
      out << buf;
      for (std::size_t v : sizes) {
        auto it = text.find({d, v});
        std::snprintf(buf, sizeof buf, " | %-14s", it == text.end() ? kMissingCell : it->second.c_str());
        out << buf;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace rescal
