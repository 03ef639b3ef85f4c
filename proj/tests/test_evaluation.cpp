#include <doctest.h>

#include <cmath>
#include <random>

#include "rescal/errors.hpp"
#include "rescal/evaluation.hpp"
#include "rescal/training.hpp"

using namespace rescal;

namespace {

EdgePartitions tree_parts(std::size_t depth) { return EdgePartitions(transitive_closure(build_complete_binary_tree(depth))); }

double oracle_accuracy(const RescalModel& m, const std::vector<Edge>& pairs, bool expected) {
  std::size_t hit = 0;
  for (const Edge& e : pairs) {
    const double s1 = m.score(e.sub, Relation::kPresent, e.obj);
    const double s0 = m.score(e.sub, Relation::kAbsent, e.obj);
    if ((s1 > s0) == expected) ++hit;
  }
  return double(hit) / double(pairs.size());
}

EvalReport fake_report(double e, double ec, double erev) {
  EvalReport r;
  r.acc_e = e;
  r.acc_ec = ec;
  r.acc_erev = erev;
  return r;
}

}  // namespace

TEST_CASE("constant embeddings with identity presence matrix") {
  EdgePartitions p = tree_parts(2);
  RescalModel m(Matrix::Ones(3, 2), {Matrix::Zero(2, 2), Matrix::Identity(2, 2)});
  CHECK(accuracy(m, p.positives(), true) == 1.0);
  auto ec = p.materialize_complement();
  CHECK(accuracy(m, ec, false) == 0.0);
  CHECK_THROWS_AS(accuracy(m, std::vector<Edge>{}, true), std::invalid_argument);
  std::vector<Edge> one{{0, 1}};
  CHECK(accuracy(m, one, false) == 0.0);
}

TEST_CASE("accuracy and evaluate_all match a per-pair oracle") {
  EdgePartitions p = tree_parts(6);
  RescalModel m = init_model(p.num_vertices(), 2, 5, 12, 1.0);
  std::vector<Edge> e(p.positives().begin(), p.positives().end());
  std::vector<Edge> rev(p.reversed().begin(), p.reversed().end());
  std::vector<Edge> ec = p.materialize_complement();
  EvalReport r = evaluate_all(m, p);
  CHECK(r.acc_e == oracle_accuracy(m, e, true));
  CHECK(r.acc_ec == oracle_accuracy(m, ec, false));
  CHECK(r.acc_erev == oracle_accuracy(m, rev, false));
  CHECK(r.size_e == e.size());
  CHECK(r.size_ec == ec.size());
  CHECK(r.size_erev == rev.size());
  CHECK_FALSE(r.ec_sampled);
  CHECK(evaluate_all(m, p) == r);

  // E^rev accuracy through filtering E^c.
  std::vector<Edge> filtered;
  for (const Edge& x : ec)
    if (p.graph().contains({x.obj, x.sub})) filtered.push_back(x);
  CHECK(filtered == rev);
  CHECK(oracle_accuracy(m, filtered, false) == r.acc_erev);

  RescalModel wrong = init_model(p.num_vertices() + 1, 2, 5, 12, 1.0);
  CHECK_THROWS_AS(evaluate_all(wrong, p), std::invalid_argument);
}

TEST_CASE("parallel evaluation gives identical counts") {
  EdgePartitions p = tree_parts(9);
  RescalModel m = init_model(p.num_vertices(), 2, 8, 3, 1.0);
  EvalOptions seq, par;
  par.threads = 4;
  CHECK(evaluate_counts(m, p, seq) == evaluate_counts(m, p, par));
  seq.complement_cap = par.complement_cap = 5000;
  CHECK(evaluate_counts(m, p, seq) == evaluate_counts(m, p, par));
}

TEST_CASE("sampled E^c evaluation is labelled and close to exact") {
  EdgePartitions p = tree_parts(8);
  RescalModel m = init_model(p.num_vertices(), 2, 6, 5, 1.0);
  EvalReport exact = evaluate_all(m, p);
  EvalOptions opts;
  opts.complement_cap = 20000;
  EvalReport sampled = evaluate_all(m, p, opts);
  CHECK(sampled.ec_sampled);
  CHECK(sampled.size_ec == 20000);
  CHECK(std::abs(sampled.acc_ec - exact.acc_ec) < 0.02);
  CHECK(sampled.acc_e == exact.acc_e);
}

TEST_CASE("aggregate_runs") {
  RunSummary one = aggregate_runs({fake_report(0.3, 0.9, 0.5)});
  CHECK(one.e.mean == 0.3);
  CHECK(one.e.stddev == 0.0);
  RunSummary two = aggregate_runs({fake_report(0.4, 1, 1), fake_report(0.6, 1, 1)});
  CHECK(two.e.mean == doctest::Approx(0.5));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  std::vector<EvalReport> five;
  for (int k = 0; k < 5; ++k) five.push_back(fake_report(u(rng), u(rng), u(rng)));
  RunSummary s = aggregate_runs(five);
  double mean = 0;
  for (const auto& r : five) mean += r.acc_ec;
  mean /= 5;
  double var = 0;
  for (const auto& r : five) var += (r.acc_ec - mean) * (r.acc_ec - mean);
  CHECK(s.ec.mean == doctest::Approx(mean).epsilon(1e-14));
  CHECK(s.ec.stddev == doctest::Approx(std::sqrt(var / 4)).epsilon(1e-14));
  CHECK(s.reports.size() == 5);
}

TEST_CASE("render_table layout, markers and round-trip") {
  TableCell a{"fullset", 2047, 50, aggregate_runs({fake_report(0.66, 1.0, 1.0), fake_report(0.64, 0.998, 1.0)}), false};
  std::vector<TableCell> one{a};
  std::vector<std::string> modes{"fullset"};
  std::vector<std::size_t> d50{50}, v2047{2047};
  std::string csv = render_table(one, modes, d50, v2047);
  CHECK(csv == std::string(kCsvHeader) + "\nfullset,2047,50,2,65.0,1.4,99.9,0.1,100.0,0.0\n");

  std::vector<std::size_t> dims{50, 100, 200, 400}, sizes{2047, 4095};
  TableCell failed{"fullset", 4095, 100, std::nullopt, true};
  std::vector<TableCell> cells{a, failed};
  std::string grid = render_table(cells, modes, dims, sizes);
  std::vector<CsvRow> rows = parse_table(grid);
  REQUIRE(rows.size() == 8);
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (const CsvRow& r : rows) order.emplace_back(r.dim, r.num_vertices);
  CHECK(order.front() == std::make_pair<std::size_t, std::size_t>(50, 2047));
  CHECK(order[1] == std::make_pair<std::size_t, std::size_t>(50, 4095));
  CHECK(order.back() == std::make_pair<std::size_t, std::size_t>(400, 4095));
  CHECK(rows[0].status == "ok");
  CHECK((*rows[0].values)[0] == 65.0);
  CHECK((*rows[0].values)[1] == 1.4);
  CHECK(rows[3].status == kFailedCell);
  CHECK(rows[2].status == kMissingCell);

  CHECK(render_table(std::span<const TableCell>(cells), modes, dims, sizes) ==
        render_table(std::span<const TableCell>(cells), modes, dims, sizes));
  std::vector<std::size_t> other{100};
  CHECK_THROWS_AS(render_table(one, modes, other, v2047), std::invalid_argument);

  const std::string pretty = render_pretty(rows);
  CHECK(pretty.find("65 100 100") != std::string::npos);
  CHECK(pretty.find("FAILED") != std::string::npos);
  CHECK_THROWS_AS(parse_table("not,a,header\n"), ParseError);
}
