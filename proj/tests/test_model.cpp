#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "rescal/errors.hpp"
#include "rescal/model.hpp"

using namespace rescal;

namespace {

double naive_score(const RescalModel& m, EntityId v, std::size_t r, EntityId w) {
  double s = 0;
  const auto d = static_cast<Eigen::Index>(m.dim());
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      s += m.entities()(v, i) * m.relation(r)(i, j) * m.entities()(w, j);
  return s;
}

RescalModel two_by_two(Matrix a, Matrix absent, Matrix present) {
  return RescalModel(std::move(a), {std::move(absent), std::move(present)});
}

}  // namespace

TEST_CASE("init_model shapes, determinism and zero scale") {
  RescalModel m = init_model(2047, 2, 50, 3, default_init_scale(50));
  CHECK(m.num_entities() == 2047);
  CHECK(m.dim() == 50);
  CHECK(m.num_relations() == 2);
  CHECK(m.relation(0).rows() == 50);
  CHECK(m.relation(1).cols() == 50);
  CHECK(m == init_model(2047, 2, 50, 3, default_init_scale(50)));
  CHECK_FALSE(m == init_model(2047, 2, 50, 4, default_init_scale(50)));
  const double bound = default_init_scale(50);
  CHECK(m.entities().cwiseAbs().maxCoeff() < bound);
  RescalModel z = init_model(10, 2, 4, 0, 0.0);
  CHECK(z.squared_norm() == 0.0);
  CHECK_THROWS_AS(init_model(10, 2, 4, 0, std::numeric_limits<double>::infinity()), std::invalid_argument);
  CHECK_THROWS_AS(init_model(10, 2, 4, 0, std::nan("")), std::invalid_argument);
}

TEST_CASE("score examples") {
  Matrix a(2, 2);
  a << 1, 0, 0, 1;
  Matrix upper(2, 2);
  upper << 0, 1, 0, 0;
  RescalModel m = two_by_two(a, Matrix::Identity(2, 2), upper);
  CHECK(m.score(0, Relation::kAbsent, 0) == 1.0);
  CHECK(m.score(0, Relation::kPresent, 1) == 1.0);
  CHECK(m.score(1, Relation::kPresent, 0) == 0.0);
  CHECK_THROWS_AS(m.score(2, Relation::kAbsent, 0), std::invalid_argument);
  CHECK_THROWS_AS(m.score(0, std::size_t{2}, 0), std::invalid_argument);
}

TEST_CASE("score matches a naive double loop") {
  RescalModel m = init_model(30, 2, 7, 11, 1.0);
  for (EntityId v = 0; v < 30; v += 3)
    for (EntityId w = 0; w < 30; w += 4)
      for (std::size_t r = 0; r < 2; ++r) CHECK(m.score(v, r, w) == doctest::Approx(naive_score(m, v, r, w)).epsilon(1e-12));
}

TEST_CASE("predict_relation, classify_pair and ties") {
  Matrix a(1, 2);
  a << 1, 0;
  RescalModel m = two_by_two(a, Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  CHECK(m.predict_relation(0, 0) == Relation::kPresent);
  CHECK(m.classify_pair(0, 0));
  RescalModel tied = two_by_two(a, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  CHECK(tied.predict_relation(0, 0) == Relation::kAbsent);
  CHECK_FALSE(tied.classify_pair(0, 0));

  RescalModel r = init_model(40, 2, 5, 2, 1.0);
  for (EntityId v = 0; v < 40; ++v)
    for (EntityId w = 0; w < 40; ++w) {
      const double s0 = naive_score(r, v, 0, w), s1 = naive_score(r, v, 1, w);
      CHECK(r.classify_pair(v, w) == (s1 > s0));
      CHECK((r.predict_relation(v, w) == Relation::kPresent) == r.classify_pair(v, w));
    }
}

TEST_CASE("difference matrix") {
  RescalModel same = two_by_two(Matrix::Ones(3, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  CHECK(same.difference_matrix().isZero());
  RescalModel id = two_by_two(Matrix::Ones(3, 2), Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  CHECK(id.difference_matrix() == Matrix::Identity(2, 2));

  RescalModel r = init_model(1000, 2, 6, 8, 1.0);
  const Matrix diff = r.difference_matrix();
  std::mt19937_64 rng(1);
  for (int k = 0; k < 1000; ++k) {
    const auto v = static_cast<EntityId>(rng() % 1000), w = static_cast<EntityId>(rng() % 1000);
    const double s = r.entities().row(v).dot(diff * r.entities().row(w).transpose());
    CHECK((s > 0) == r.classify_pair(v, w));
  }
}

TEST_CASE("bilinearity") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix ent = Matrix::NullaryExpr(4, 6, [&] { return n(rng); });
    Matrix m = Matrix::NullaryExpr(6, 6, [&] { return n(rng); });
    const double alpha = n(rng), beta = n(rng);
    ent.row(3) = alpha * ent.row(0) + beta * ent.row(1);
    RescalModel model = two_by_two(ent, m, m);
    const double lhs = model.score(3, Relation::kPresent, 2);
    const double rhs = alpha * model.score(0, Relation::kPresent, 2) + beta * model.score(1, Relation::kPresent, 2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("scaling embeddings leaves decisions unchanged") {
  RescalModel m = init_model(50, 2, 8, 9, 1.0);
  RescalModel scaled = m;
  scaled.entities() *= 3.7;
  for (EntityId v = 0; v < 50; ++v)
    for (EntityId w = 0; w < 50; ++w) {
      CHECK(scaled.classify_pair(v, w) == m.classify_pair(v, w));
      CHECK(scaled.predict_relation(v, w) == m.predict_relation(v, w));
    }
}

TEST_CASE("symmetric relation matrices give symmetric decisions") {
  RescalModel m = init_model(60, 2, 8, 10, 1.0);
  for (std::size_t r = 0; r < 2; ++r) m.relation(r) = 0.5 * (m.relation(r) + m.relation(r).transpose()).eval();
  for (EntityId v = 0; v < 60; ++v)
    for (EntityId w = 0; w < 60; ++w) CHECK(m.classify_pair(v, w) == m.classify_pair(w, v));
}

TEST_CASE("binary serialization round-trips bit-exactly") {
  RescalModel m = init_model(123, 2, 17, 77, 0.3);
  m.provenance = "seed=77\ndim=17";
  std::stringstream buf;
  save_model(buf, m);
  RescalModel back = load_model(buf);
  CHECK(back == m);
  CHECK(back.provenance == m.provenance);
  CHECK(std::memcmp(back.entities().data(), m.entities().data(), sizeof(double) * 123 * 17) == 0);

  std::stringstream full;
  save_model(full, m);
  std::string bytes = full.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS(load_model(cut));
  std::stringstream garbage("NOTAMODEL-------------------------");
  CHECK_THROWS(load_model(garbage));
}

TEST_CASE("matrix text round-trips exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Matrix m = Matrix::NullaryExpr(5, 5, [&] { return n(rng); });
  std::stringstream buf;
  write_matrix_text(buf, m);
  CHECK(read_matrix_text(buf) == m);

  std::istringstream ragged("1 2\n3\n");
  CHECK_THROWS_AS(read_matrix_text(ragged), ParseError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_matrix_text(empty), InvalidInput);
}
