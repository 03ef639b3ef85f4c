#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rescal/errors.hpp"
#include "rescal/evaluation.hpp"
#include "rescal/training.hpp"

using namespace rescal;

namespace {

EdgePartitions tree_parts(std::size_t depth) { return EdgePartitions(transitive_closure(build_complete_binary_tree(depth))); }

double sq(double x) { return x * x; }

// Every ordered pair evaluated one at a time.
double brute_fullset(const RescalModel& m, const EdgePartitions& p, double reg) {
  double total = 0;
  const auto n = static_cast<EntityId>(p.num_vertices());
  for (EntityId v = 0; v < n; ++v)
    for (EntityId w = 0; w < n; ++w) {
      const double x = p.graph().contains({v, w}) ? 1.0 : 0.0;
      total += sq(m.score(v, Relation::kPresent, w) - x) + sq(m.score(v, Relation::kAbsent, w) - (1 - x));
    }
  return total + reg * m.squared_norm();
}

double brute_zero_filled(const RescalModel& m, const EdgePartitions& p, const std::vector<Edge>& neg, double reg) {
  double total = 0;
  const auto n = static_cast<EntityId>(p.num_vertices());
  for (EntityId v = 0; v < n; ++v)
    for (EntityId w = 0; w < n; ++w) {
      const bool pos = p.graph().contains({v, w});
      const bool is_neg = std::find(neg.begin(), neg.end(), Edge{v, w}) != neg.end();
      total += sq(m.score(v, Relation::kPresent, w) - (pos ? 1 : 0)) +
               sq(m.score(v, Relation::kAbsent, w) - (is_neg ? 1 : 0));
    }
  return total + reg * m.squared_norm();
}

// Finite-difference check on one scalar parameter reached through `slot`.
template <class Slot>
void check_fd(RescalModel& m, const LabeledPair& pair, double reg, Slot slot, double analytic) {
  const double h = 1e-5;
  double& theta = slot(m);
  const double saved = theta;
  theta = saved + h;
  const double up = pair_loss(m, pair, reg);
  theta = saved - h;
  const double down = pair_loss(m, pair, reg);
  theta = saved;
  const double numeric = (up - down) / (2 * h);
  const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
  CHECK(rel < 1e-4);
}

}  // namespace

TEST_CASE("loss examples") {
  RescalModel zero = init_model(2, 2, 3, 0, 0.0);
  std::vector<LabeledPair> one{{0, 1, 1.0}};
  CHECK(loss(zero, one, 0.0) == 1.0);  // (0 - 1)^2 on r1, (0 - 0)^2 on r0
  std::vector<LabeledPair> both{{0, 1, 1.0}, {1, 0, 0.0}};
  CHECK(loss(zero, both, 0.0) == 2.0);

  Matrix a(2, 1);
  a << 1, 1;
  RescalModel perfect(a, {Matrix::Zero(1, 1), Matrix::Ones(1, 1)});
  CHECK(loss(perfect, one, 0.0) == 0.0);
  CHECK(loss(perfect, one, 0.5) == doctest::Approx(0.5 * 3.0));
}

TEST_CASE("loss matches per-pair recomputation") {
  RescalModel m = init_model(20, 2, 4, 1, 0.7);
  std::mt19937_64 rng(2);
  std::vector<LabeledPair> pairs;
  for (int k = 0; k < 100; ++k)
    pairs.push_back({static_cast<EntityId>(rng() % 20), static_cast<EntityId>(rng() % 20), double(rng() % 2)});
  double expected = 0;
  for (const auto& p : pairs)
    expected += sq(m.score(p.sub, Relation::kPresent, p.obj) - p.label) +
                sq(m.score(p.sub, Relation::kAbsent, p.obj) - (1 - p.label));
  double norm = m.entities().squaredNorm() + m.relation(0).squaredNorm() + m.relation(1).squaredNorm();
  CHECK(loss(m, pairs, 0.03) == doctest::Approx(expected + 0.03 * norm).epsilon(1e-12));
}

TEST_CASE("gradient of a zero model and of the regulariser") {
  RescalModel zero = init_model(3, 2, 4, 0, 0.0);
  PairGradient g = gradient(zero, {0, 1, 1.0}, 0.0);
  CHECK(g.sub.isZero());
  CHECK(g.obj.isZero());
  CHECK(g.absent.isZero());
  CHECK(g.present.isZero());

  // a_obj = 0 zeroes every score, leaving only the regulariser on M.
  RescalModel m = init_model(3, 2, 4, 5, 1.0);
  m.entities().row(1).setZero();
  const double reg = 0.2;
  PairGradient r = gradient(m, {0, 1, 0.0}, reg);
  CHECK((r.present - 2 * reg * m.relation(1)).norm() < 1e-12);
  CHECK((r.absent - 2 * reg * m.relation(0)).norm() < 1e-12);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    RescalModel m = init_model(6, 2, 5, rng(), 1.0);
    const LabeledPair pair{static_cast<EntityId>(rng() % 6), static_cast<EntityId>(rng() % 6), double(rng() % 2)};
    const double reg = 0.01;
    PairGradient g = gradient(m, pair, reg);
    const auto i = static_cast<Eigen::Index>(rng() % 5), j = static_cast<Eigen::Index>(rng() % 5);
    switch (rng() % 4) {
      case 0: {
        // A self-pair's row plays both roles; the total derivative sums them.
        const double analytic = pair.sub == pair.obj ? g.sub(i) + g.obj(i) : g.sub(i);
        check_fd(m, pair, reg, [&](RescalModel& x) -> double& { return x.entities()(pair.sub, i); }, analytic);
        break;
      }
      case 1: {
        const double analytic = pair.sub == pair.obj ? g.sub(i) + g.obj(i) : g.obj(i);
        check_fd(m, pair, reg, [&](RescalModel& x) -> double& { return x.entities()(pair.obj, i); }, analytic);
        break;
      }
      case 2:
        check_fd(m, pair, reg, [&](RescalModel& x) -> double& { return x.relation(0)(i, j); }, g.absent(i, j));
        break;
      default:
        check_fd(m, pair, reg, [&](RescalModel& x) -> double& { return x.relation(1)(i, j); }, g.present(i, j));
    }
  }
}

TEST_CASE("sgd_step equals summed entity and mean relation gradients") {
  RescalModel m = init_model(8, 2, 3, 4, 0.8);
  std::vector<LabeledPair> batch{{0, 1, 1}, {1, 2, 0}, {0, 2, 1}, {3, 3, 0}};
  const double lr = 0.1, reg = 0.05;
  Matrix ent = m.entities();
  Matrix absent = Matrix::Zero(3, 3), present = Matrix::Zero(3, 3);
  Matrix ent_grad = Matrix::Zero(8, 3);
  for (const auto& p : batch) {
    PairGradient g = gradient(m, p, reg);
    ent_grad.row(p.sub) += g.sub.transpose();
    ent_grad.row(p.obj) += g.obj.transpose();
    absent += g.absent;
    present += g.present;
  }
  RescalModel expected = m;
  expected.entities() = ent - lr * ent_grad;
  expected.relation(0) = m.relation(0) - lr * absent / double(batch.size());
  expected.relation(1) = m.relation(1) - lr * present / double(batch.size());
  sgd_step(m, batch, lr, reg);
  CHECK((m.entities() - expected.entities()).norm() < 1e-12);
  CHECK((m.relation(0) - expected.relation(0)).norm() < 1e-12);
  CHECK((m.relation(1) - expected.relation(1)).norm() < 1e-12);
}

TEST_CASE("closed-form objectives agree with brute force") {
  EdgePartitions p = tree_parts(4);
  RescalModel m = init_model(p.num_vertices(), 2, 6, 3, 0.5);
  CHECK(fullset_objective(m, p, 0.01) == doctest::Approx(brute_fullset(m, p, 0.01)).epsilon(1e-10));
  std::vector<Edge> neg = sample_complement(p, p.positives().size(), 9);
  CHECK(zero_filled_objective(m, p, neg, 0.01) == doctest::Approx(brute_zero_filled(m, p, neg, 0.01)).epsilon(1e-10));
  std::vector<Edge> bad{{0, 1}};
  CHECK_THROWS_AS(zero_filled_objective(m, p, bad, 0.01), std::invalid_argument);
}

TEST_CASE("leading eigenvectors recover planted blocks on both code paths") {
  for (int n : {300, static_cast<int>(kDenseEigenLimit) + 100}) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 0.01 * (i % 7));
    for (int k = 0; k < 3; ++k) {
      // Planted rank-3 structure with distinct strengths.
      for (int i = k * 40; i < k * 40 + 40; ++i)
        for (int j = k * 40; j < k * 40 + 40; ++j) trips.emplace_back(i, j, 3.0 - k);
    }
    Eigen::SparseMatrix<double> s(n, n);
    s.setFromTriplets(trips.begin(), trips.end());
    Matrix top = leading_eigenvectors(s, 3, 1);
    CHECK(top.rows() == n);
    CHECK(top.cols() == 3);
    for (int k = 0; k < 3; ++k) {
      Vector block = Vector::Zero(n);
      block.segment(k * 40, 40).setConstant(1.0 / std::sqrt(40.0));
      CHECK(std::abs(top.col(k).dot(block)) > 0.999);
    }
  }
}

TEST_CASE("FullSet ALS fits the depth-3 toy and is monotone") {
  EdgePartitions p = tree_parts(3);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.sweeps = 50;
  TrainResult r = train_fullset(p, cfg);
  EvalReport rep = evaluate_all(r.model, p);
  CHECK(rep.acc_e == 1.0);
  CHECK(rep.acc_ec == 1.0);
  CHECK(rep.acc_erev == 1.0);
  REQUIRE(r.loss_history.size() == 51);
  for (std::size_t k = 1; k < r.loss_history.size(); ++k)
    CHECK(r.loss_history[k] <= r.loss_history[k - 1] * (1 + 1e-8));
  CHECK(r.loss_history.back() == doctest::Approx(fullset_objective(r.model, p, cfg.regularization)).epsilon(1e-10));
  CHECK(r.num_training_pairs == 49);
}

TEST_CASE("ALS requires positive regularisation") {
  EdgePartitions p = tree_parts(3);
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.regularization = 0;
  CHECK_THROWS(train_fullset(p, cfg));
}

TEST_CASE("SubSet solvers on toys") {
  EdgePartitions p3 = tree_parts(3);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.mode = TrainMode::kSubSet;
  TrainResult als = train_subset(p3, cfg);
  CHECK(evaluate_all(als.model, p3).acc_e == 1.0);
  CHECK(als.num_training_pairs == 20);
  for (std::size_t k = 1; k < als.loss_history.size(); ++k)
    CHECK(als.loss_history[k] <= als.loss_history[k - 1] * (1 + 1e-8));

  cfg.subset_solver = SubsetSolver::kSgd;
  TrainResult sgd = train_subset(p3, cfg);
  CHECK(evaluate_all(sgd.model, p3).acc_e == 1.0);

  EdgePartitions p4 = tree_parts(4);
  TrainResult smoke = train_subset(p4, cfg);
  REQUIRE(smoke.loss_history.size() == cfg.epochs + 1);
  CHECK(smoke.loss_history.back() < 0.1 * smoke.loss_history.front());

  TrainResult again = train_subset(p4, cfg);
  CHECK(again.model == smoke.model);
  CHECK(again.loss_history == smoke.loss_history);

  cfg.resample_negatives = true;
  TrainResult resampled = train_subset(p4, cfg);
  CHECK(resampled.model.all_finite());
  CHECK_FALSE(resampled.model == smoke.model);
}

TEST_CASE("SubSet ALS is deterministic and uses E plus an equal-size sample") {
  EdgePartitions p = tree_parts(5);
  TrainConfig cfg;
  cfg.dim = 6;
  cfg.mode = TrainMode::kSubSet;
  TrainResult a = train(p, cfg);
  TrainResult b = train(p, cfg);
  CHECK(a.model == b.model);
  CHECK(a.num_training_pairs == 2 * p.positives().size());
  auto pairs = subset_training_pairs(p, p.positives().size(), 1);
  CHECK(pairs.size() == 2 * p.positives().size());
  for (std::size_t k = 0; k < p.positives().size(); ++k) CHECK(pairs[k].label == 1.0);
  for (std::size_t k = p.positives().size(); k < pairs.size(); ++k) {
    CHECK(pairs[k].label == 0.0);
    CHECK(p.in_complement({pairs[k].sub, pairs[k].obj}));
  }
}

TEST_CASE("invalid solver combinations are rejected") {
  EdgePartitions p = tree_parts(3);
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.init = InitScheme::kEigen;
  CHECK_THROWS(train_fullset(p, cfg));
  cfg.mode = TrainMode::kSubSet;
  cfg.subset_solver = SubsetSolver::kSgd;
  CHECK_THROWS(train_subset(p, cfg));
  cfg.init = InitScheme::kAuto;
  cfg.subset_solver = SubsetSolver::kAls;
  cfg.resample_negatives = true;
  CHECK_THROWS(train_subset(p, cfg));
}

TEST_CASE("config text round-trips and rejects unknown keys") {
  TrainConfig cfg;
  cfg.dim = 17;
  cfg.mode = TrainMode::kSubSet;
  cfg.learning_rate = 0.125;
  cfg.init_scale = 0.3;
  cfg.resample_negatives = true;
  cfg.subset_solver = SubsetSolver::kSgd;
  std::istringstream in(cfg.to_text());
  TrainConfig back = parse_train_config(in);
  CHECK(back.to_text() == cfg.to_text());

  std::istringstream comments("# header\ndim = 12  # trailing\n\nmode=subset\n");
  TrainConfig c = parse_train_config(comments);
  CHECK(c.dim == 12);
  CHECK(c.mode == TrainMode::kSubSet);

  std::istringstream unknown("dim=3\nmomentum=0.9\n");
  try {
    parse_train_config(unknown);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad_value("dim=abc\n");
  CHECK_THROWS_AS(parse_train_config(bad_value), ParseError);
  std::istringstream zero_dim("dim=0\n");
  CHECK_THROWS(parse_train_config(zero_dim));
}
