#include "rescal/model.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rescal/errors.hpp"

namespace rescal {

RescalModel::RescalModel(Matrix entities, std::vector<Matrix> relations)
    : entities_(std::move(entities)), relations_(std::move(relations)) {
  if (entities_.rows() < 1 || entities_.cols() < 1) throw std::invalid_argument("empty embedding matrix");
  if (relations_.empty()) throw std::invalid_argument("model needs at least one relation");
  for (const Matrix& m : relations_)
    if (m.rows() != entities_.cols() || m.cols() != entities_.cols())
      throw std::invalid_argument("relation matrix must be d x d");
}

void RescalModel::check_entity(EntityId v) const {
  if (v >= num_entities()) throw std::invalid_argument("entity id " + std::to_string(v) + " out of range");
}

double RescalModel::score(EntityId v, std::size_t r, EntityId w) const {
  check_entity(v);
  check_entity(w);
  if (r >= relations_.size()) throw std::invalid_argument("relation id out of range");
  return entities_.row(v).dot(relations_[r] * entities_.row(w).transpose());
}

Relation RescalModel::predict_relation(EntityId v, EntityId w) const {
  return classify_pair(v, w) ? Relation::kPresent : Relation::kAbsent;
}

bool RescalModel::classify_pair(EntityId v, EntityId w) const {
  if (relations_.size() < 2) throw std::logic_error("classification needs relations r0 and r1");
  return score(v, Relation::kPresent, w) > score(v, Relation::kAbsent, w);
}

Matrix RescalModel::difference_matrix() const {
  if (relations_.size() < 2) throw std::logic_error("difference needs relations r0 and r1");
  return relations_[1] - relations_[0];
}

bool RescalModel::all_finite() const {
  if (!entities_.allFinite()) return false;
  for (const Matrix& m : relations_)
    if (!m.allFinite()) return false;
  return true;
}

double RescalModel::squared_norm() const {
  double total = entities_.squaredNorm();
  for (const Matrix& m : relations_) total += m.squaredNorm();
  return total;
}

bool operator==(const RescalModel& a, const RescalModel& b) {
  if (a.entities_.rows() != b.entities_.rows() || a.entities_.cols() != b.entities_.cols()) return false;
  if (a.relations_.size() != b.relations_.size()) return false;
  if (a.entities_ != b.entities_) return false;
  for (std::size_t r = 0; r < a.relations_.size(); ++r)
    if (a.relations_[r] != b.relations_[r]) return false;
  return a.provenance == b.provenance;
}

double default_init_scale(std::size_t dim) { return 1.0 / std::sqrt(static_cast<double>(dim)); }

RescalModel init_model(std::size_t num_entities, std::size_t num_relations, std::size_t dim,
                       std::uint64_t seed, double scale) {
  if (num_entities < 1 || num_relations < 1 || dim < 1)
    throw std::invalid_argument("V, R and d must be >= 1");
  if (!std::isfinite(scale) || scale < 0) throw std::invalid_argument("init scale must be finite and >= 0");

  std::mt19937_64 rng(seed);
  auto draw = [&] {
    if (scale == 0) return 0.0;
    std::uniform_real_distribution<double> u(-scale, scale);
    return u(rng);
  };
  const auto n = static_cast<Eigen::Index>(num_entities);
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix entities(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) entities(i, j) = draw();
  std::vector<Matrix> relations;
  for (std::size_t r = 0; r < num_relations; ++r) {
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = draw();
    relations.push_back(std::move(m));
  }
  RescalModel model(std::move(entities), std::move(relations));
  std::ostringstream prov;
  prov << "init_seed=" << seed << " init_scale=" << scale;
  model.provenance = prov.str();
  return model;
}

namespace {

constexpr char kMagic[8] = {'R', 'E', 'S', 'C', 'A', 'L', 'M', '1'};

static_assert(std::endian::native == std::endian::little, "model container assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw InvalidInput("truncated model file");
  return v;
}

// Row-major on disk, column-major in Eigen.
void put_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double x = m(i, j);
      out.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
}

Matrix get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double x = 0;
      if (!in.read(reinterpret_cast<char*>(&x), sizeof x)) throw InvalidInput("truncated model file");
      m(i, j) = x;
    }
  return m;
}

}  // namespace

void save_model(std::ostream& out, const RescalModel& model) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, model.dim());
  put_u64(out, model.num_entities());
  put_u64(out, model.num_relations());
  put_u64(out, model.provenance.size());
  out.write(model.provenance.data(), static_cast<std::streamsize>(model.provenance.size()));
  put_matrix(out, model.entities());
  for (std::size_t r = 0; r < model.num_relations(); ++r) put_matrix(out, model.relation(r));
  if (!out) throw std::runtime_error("model write failed");
}

RescalModel load_model(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw InvalidInput("not a model file (bad magic)");
  const auto d = get_u64(in), n = get_u64(in), r = get_u64(in), plen = get_u64(in);
  if (d == 0 || n == 0 || r == 0 || d > (1u << 16) || r > 1024 || n > (1ull << 32) || plen > (1u << 20))
    throw InvalidInput("implausible model header");
  std::string prov(plen, '\0');
  if (plen && !in.read(prov.data(), static_cast<std::streamsize>(plen))) throw InvalidInput("truncated model file");
  Matrix entities = get_matrix(in, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<Matrix> relations;
  for (std::uint64_t k = 0; k < r; ++k)
    relations.push_back(get_matrix(in, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  RescalModel model(std::move(entities), std::move(relations));
  model.provenance = std::move(prov);
  return model;
}

void save_model(const std::filesystem::path& path, const RescalModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_model(out, model);
}

RescalModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_model(in);
}

void write_matrix_text(std::ostream& out, const Matrix& m) {
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
      if (j) out << ' ';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

Matrix read_matrix_text(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      double x = 0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError(lineno, "not a number: '" + tok + "'");
      if (!std::isfinite(x)) throw ParseError(lineno, "non-finite entry");
      row.push_back(x);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError(lineno, "ragged matrix row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

}  // namespace rescal
