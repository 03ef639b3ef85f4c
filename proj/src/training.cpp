#include "rescal/training.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rescal/errors.hpp"

namespace rescal {

std::string to_string(TrainMode mode) { return mode == TrainMode::kFullSet ? "fullset" : "subset"; }

TrainMode parse_train_mode(std::string_view text) {
  if (text == "fullset" || text == "FullSet") return TrainMode::kFullSet;
  if (text == "subset" || text == "SubSet") return TrainMode::kSubSet;
  throw std::invalid_argument("unknown training mode '" + std::string(text) + "'");
}

std::string to_string(SubsetSolver solver) { return solver == SubsetSolver::kAls ? "als" : "sgd"; }

SubsetSolver parse_subset_solver(std::string_view text) {
  if (text == "als") return SubsetSolver::kAls;
  if (text == "sgd") return SubsetSolver::kSgd;
  throw std::invalid_argument("unknown subset solver '" + std::string(text) + "'");
}

std::string to_string(InitScheme init) {
  switch (init) {
    case InitScheme::kAuto: return "auto";
    case InitScheme::kUniform: return "uniform";
    case InitScheme::kEigen: return "eigen";
  }
  return "auto";
}

InitScheme parse_init_scheme(std::string_view text) {
  if (text == "auto") return InitScheme::kAuto;
  if (text == "uniform") return InitScheme::kUniform;
  if (text == "eigen") return InitScheme::kEigen;
  throw std::invalid_argument("unknown init scheme '" + std::string(text) + "'");
}

InitScheme TrainConfig::resolved_init() const {
  if (init != InitScheme::kAuto) return init;
  return mode == TrainMode::kSubSet && subset_solver == SubsetSolver::kAls ? InitScheme::kEigen : InitScheme::kUniform;
}

double TrainConfig::effective_init_scale() const { return init_scale ? *init_scale : default_init_scale(dim); }

void TrainConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (sweeps < 1 || epochs < 1 || batch_size < 1 || negatives_per_positive < 1)
    throw std::invalid_argument("counts must be positive");
  if (!std::isfinite(learning_rate) || learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
  if (!std::isfinite(lr_decay) || lr_decay <= 0 || lr_decay > 1) throw std::invalid_argument("lr_decay must be in (0, 1]");
  if (!std::isfinite(regularization) || regularization < 0) throw std::invalid_argument("regularization must be >= 0");
  if (init_scale && (!std::isfinite(*init_scale) || *init_scale < 0))
    throw std::invalid_argument("init_scale must be finite and >= 0");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "dim=" << dim << '\n'
      << "mode=" << to_string(mode) << '\n'
      << "sweeps=" << sweeps << '\n'
      << "epochs=" << epochs << '\n'
      << "learning_rate=" << learning_rate << '\n'
      << "lr_decay=" << lr_decay << '\n'
      << "regularization=" << regularization << '\n'
      << "seed=" << seed << '\n';
  if (init_scale) out << "init_scale=" << *init_scale << '\n';
  out << "negatives_per_positive=" << negatives_per_positive << '\n'
      << "resample_negatives=" << (resample_negatives ? "true" : "false") << '\n'
      << "batch_size=" << batch_size << '\n'
      << "subset_solver=" << to_string(subset_solver) << '\n'
      << "init=" << to_string(init) << '\n';
  return out.str();
}

namespace {

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("bad boolean for " + std::string(key) + ": '" + std::string(text) + "'");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

bool apply_train_setting(TrainConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "dim") cfg.dim = parse_number<std::size_t>(key, value);
  else if (key == "mode") cfg.mode = parse_train_mode(value);
  else if (key == "sweeps") cfg.sweeps = parse_number<std::size_t>(key, value);
  else if (key == "epochs") cfg.epochs = parse_number<std::size_t>(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
  else if (key == "lr_decay") cfg.lr_decay = parse_number<double>(key, value);
  else if (key == "regularization") cfg.regularization = parse_number<double>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "init_scale") cfg.init_scale = parse_number<double>(key, value);
  else if (key == "negatives_per_positive") cfg.negatives_per_positive = parse_number<std::size_t>(key, value);
  else if (key == "resample_negatives") cfg.resample_negatives = parse_bool(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "subset_solver") cfg.subset_solver = parse_subset_solver(value);
  else if (key == "init") cfg.init = parse_init_scheme(value);
  else return false;
  return true;
}

TrainConfig parse_train_config(std::istream& in) {
  TrainConfig cfg;
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
    auto key = trim(view.substr(0, eq));
    auto value = trim(view.substr(eq + 1));
    try {
      if (!apply_train_setting(cfg, key, value)) throw ParseError(lineno, "unknown key '" + std::string(key) + "'");
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Objectives and gradients

double pair_data_loss(const RescalModel& model, const LabeledPair& pair) {
  const double r1 = model.score(pair.sub, Relation::kPresent, pair.obj) - pair.label;
  const double r0 = model.score(pair.sub, Relation::kAbsent, pair.obj) - (1.0 - pair.label);
  return r1 * r1 + r0 * r0;
}

double loss(const RescalModel& model, std::span<const LabeledPair> pairs, double regularization) {
  double total = 0;
  for (const LabeledPair& p : pairs) total += pair_data_loss(model, p);
  return total + regularization * model.squared_norm();
}

double pair_loss(const RescalModel& model, const LabeledPair& pair, double regularization) {
  const auto& a = model.entities();
  const double reg = a.row(pair.sub).squaredNorm() + a.row(pair.obj).squaredNorm() +
                     model.relation(Relation::kAbsent).squaredNorm() +
                     model.relation(Relation::kPresent).squaredNorm();
  return pair_data_loss(model, pair) + regularization * reg;
}

PairGradient gradient(const RescalModel& model, const LabeledPair& pair, double regularization) {
  const Vector a = model.entities().row(pair.sub).transpose();
  const Vector b = model.entities().row(pair.obj).transpose();
  const Matrix& m0 = model.relation(Relation::kAbsent);
  const Matrix& m1 = model.relation(Relation::kPresent);
  const double r1 = a.dot(m1 * b) - pair.label;
  const double r0 = a.dot(m0 * b) - (1.0 - pair.label);

  PairGradient g;
  g.sub = 2 * r1 * (m1 * b) + 2 * r0 * (m0 * b) + 2 * regularization * a;
  g.obj = 2 * r1 * (m1.transpose() * a) + 2 * r0 * (m0.transpose() * a) + 2 * regularization * b;
  g.present = 2 * r1 * a * b.transpose() + 2 * regularization * m1;
  g.absent = 2 * r0 * a * b.transpose() + 2 * regularization * m0;
  return g;
}

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

SparseRows indicator(std::span<const Edge> edges, std::size_t n) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size());
  for (const Edge& e : edges) triplets.emplace_back(e.sub, e.obj, 1.0);
  SparseRows x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

// One relation slice of the target tensor: either the 0/1 indicator of a
// pair set, or its complement J - indicator (J all ones, diagonal included).
struct Slice {
  SparseRows x;
  bool complement = false;
  double squared_norm = 0;

  Slice(SparseRows indicator_matrix, bool complement_of)
      : x(std::move(indicator_matrix)), complement(complement_of) {
    const double nnz = static_cast<double>(x.nonZeros());
    const double all = static_cast<double>(x.rows()) * static_cast<double>(x.cols());
    squared_norm = complement ? all - nnz : nnz;
  }

  // X B and X^T B.
  Matrix times(const Matrix& b) const { return complement ? ones_outer(b) - x * b : Matrix(x * b); }
  Matrix transpose_times(const Matrix& b) const {
    return complement ? ones_outer(b) - x.transpose() * b : Matrix(x.transpose() * b);
  }
  // B^T X B.
  Matrix project(const Matrix& b) const {
    const Matrix inner = b.transpose() * (x * b);
    if (!complement) return inner;
    const Vector colsum = b.colwise().sum().transpose();
    return colsum * colsum.transpose() - inner;
  }

 private:
  static Matrix ones_outer(const Matrix& b) {
    return Vector::Ones(b.rows()) * b.colwise().sum();
  }
};

// Squared error over the full V x V grid of both slices plus ridge terms,
// minimised by alternating between the embeddings and the two matrices.
struct AlsProblem {
  Slice absent;   // target of slice r0
  Slice present;  // target of slice r1

  double objective(const Matrix& a, const Matrix& m0, const Matrix& m1, double reg) const {
    const Matrix gram = a.transpose() * a;
    auto slice = [&](const Slice& target, const Matrix& m) {
      const double fit = ((gram * m).cwiseProduct(m * gram)).sum();
      return target.squared_norm - 2 * target.project(a).cwiseProduct(m).sum() + fit;
    };
    return slice(present, m1) + slice(absent, m0) + reg * (a.squaredNorm() + m0.squaredNorm() + m1.squaredNorm());
  }

  // Joint least-squares step for all embeddings with the matrices fixed,
  // treating the second occurrence of A as constant.
  Matrix embedding_step(const Matrix& a, const Matrix& m0, const Matrix& m1, double reg) const {
    const Matrix gram = a.transpose() * a;
    const Matrix numer = present.times(a) * m1.transpose() + present.transpose_times(a) * m1 +
                         absent.times(a) * m0.transpose() + absent.transpose_times(a) * m0;
    Matrix denom = m1 * gram * m1.transpose() + m1.transpose() * gram * m1 + m0 * gram * m0.transpose() +
                   m0.transpose() * gram * m0;
    denom.diagonal().array() += reg;
    denom = 0.5 * (denom + denom.transpose());
    Eigen::LLT<Matrix> llt(denom);
    if (llt.info() != Eigen::Success) throw NumericalError("embedding normal equations are not positive definite");
    return llt.solve(numer.transpose()).transpose();
  }

  // Exact ridge minimiser of each slice given the embeddings: with
  // A = U S W^T, M = W [s_i s_j (U^T X U)_ij / (s_i^2 s_j^2 + reg)] W^T.
  void relation_step(const Matrix& a, Matrix& m0, Matrix& m1, double reg) const {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Matrix& u = svd.matrixU();
    const Matrix& w = svd.matrixV();
    const Vector& s = svd.singularValues();
    const Matrix ss = s * s.transpose();
    const Matrix shrink = ss.array() / (ss.array().square() + reg);
    m1 = w * present.project(u).cwiseProduct(shrink) * w.transpose();
    m0 = w * absent.project(u).cwiseProduct(shrink) * w.transpose();
  }

  Eigen::SparseMatrix<double> symmetrized_sum() const {
    if (absent.complement || present.complement)
      throw std::logic_error("eigen initialisation needs two sparse slices");
    Eigen::SparseMatrix<double> sum = Eigen::SparseMatrix<double>(present.x) + Eigen::SparseMatrix<double>(absent.x);
    Eigen::SparseMatrix<double> sym = sum + Eigen::SparseMatrix<double>(sum.transpose());
    return sym;
  }
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string provenance_for(const TrainConfig& cfg) {
  std::string text = cfg.to_text();
  std::replace(text.begin(), text.end(), '\n', ' ');
  if (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

AlsProblem fullset_problem(const EdgePartitions& parts) {
  const std::size_t n = parts.num_vertices();
  SparseRows x = indicator(parts.positives(), n);
  return {Slice(x, true), Slice(x, false)};
}

AlsProblem zero_filled_problem(const EdgePartitions& parts, std::span<const Edge> negatives) {
  const std::size_t n = parts.num_vertices();
  for (const Edge& e : negatives)
    if (!parts.in_complement(e)) throw std::invalid_argument("negative pair is not in E^c");
  return {Slice(indicator(negatives, n), false), Slice(indicator(parts.positives(), n), false)};
}

TrainResult run_als(const AlsProblem& problem, std::size_t num_vertices, const TrainConfig& cfg,
                    const ProgressFn& progress) {
  if (cfg.regularization <= 0) throw std::invalid_argument("ALS requires regularization > 0");
  RescalModel model = init_model(num_vertices, 2, cfg.dim, cfg.seed, cfg.effective_init_scale());
  Matrix& a = model.entities();
  Matrix& m0 = model.relation(Relation::kAbsent);
  Matrix& m1 = model.relation(Relation::kPresent);
  const double reg = cfg.regularization;

  if (cfg.resolved_init() == InitScheme::kEigen) {
    const Matrix vecs = leading_eigenvectors(problem.symmetrized_sum(), std::min(cfg.dim, num_vertices),
                                             mix_seed(cfg.seed, 3));
    a.leftCols(vecs.cols()) = vecs;  // columns beyond V keep their uniform draw
    problem.relation_step(a, m0, m1, reg);
  }

  TrainResult result{model, {}, 0, 0};
  double current = problem.objective(a, m0, m1, reg);
  result.loss_history.push_back(current);

  for (std::size_t sweep = 0; sweep < cfg.sweeps; ++sweep) {
    // The embedding step is not an exact minimiser (A enters the objective
    // twice), so it is damped until the objective does not rise.
    const Matrix target = problem.embedding_step(a, m0, m1, reg);
    const Matrix direction = target - a;
    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings, step *= 0.5) {
      const Matrix trial = a + step * direction;
      const double value = problem.objective(trial, m0, m1, reg);
      if (std::isfinite(value) && value <= current) {
        a = trial;
        current = value;
        accepted = true;
        break;
      }
    }
    if (!accepted || step < 1.0) ++result.damped_steps;

    problem.relation_step(a, m0, m1, reg);
    current = problem.objective(a, m0, m1, reg);
    if (!std::isfinite(current))
      throw NumericalError("ALS objective became non-finite at sweep " + std::to_string(sweep));
    result.loss_history.push_back(current);
    if (progress) progress(sweep + 1, current);
  }
  model.provenance = provenance_for(cfg);
  result.model = std::move(model);
  return result;
}

}  // namespace

Matrix leading_eigenvectors(const Eigen::SparseMatrix<double>& symmetric, std::size_t k, std::uint64_t seed) {
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n) throw std::invalid_argument("matrix must be square");
  if (k == 0 || static_cast<Eigen::Index>(k) > n) throw std::invalid_argument("k must be in [1, n]");
  const auto kk = static_cast<Eigen::Index>(k);

  if (static_cast<std::size_t>(n) <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig{Matrix(symmetric)};
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return eig.eigenvectors().rightCols(kk).rowwise().reverse();  // ascending -> descending
  }

  // Subspace iteration on S + shift * I, shift from a Gershgorin bound so
  // the largest algebraic eigenvalues dominate.
  double shift = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double col = 0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(symmetric, j); it; ++it) col += std::abs(it.value());
    shift = std::max(shift, col);
  }
  const Eigen::Index block = std::min<Eigen::Index>(n, kk + std::max<Eigen::Index>(10, kk / 2));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix q(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < block; ++j) q(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(q);
  q = qr.householderQ() * Matrix::Identity(n, block);
  Vector previous = Vector::Zero(block);
  Matrix ritz_vectors;
  for (int iter = 0; iter < 2000; ++iter) {
    Matrix z = symmetric * q + shift * q;
    Eigen::HouseholderQR<Matrix> step(z);
    q = step.householderQ() * Matrix::Identity(n, block);
    if (iter % 10 != 9) continue;
    const Matrix h = q.transpose() * (symmetric * q);
    Eigen::SelfAdjointEigenSolver<Matrix> small(0.5 * (h + h.transpose()));
    const Vector values = small.eigenvalues().reverse();
    ritz_vectors = q * small.eigenvectors().rowwise().reverse();
    const double change = (values.head(kk) - previous.head(kk)).cwiseAbs().maxCoeff();
    previous = values;
    if (change <= 1e-10 * std::max(1.0, values.head(kk).cwiseAbs().maxCoeff())) break;
  }
  return ritz_vectors.leftCols(kk);
}

double fullset_objective(const RescalModel& model, const EdgePartitions& parts, double regularization) {
  if (model.num_entities() != parts.num_vertices()) throw std::invalid_argument("model and partitions disagree on V");
  return fullset_problem(parts).objective(model.entities(), model.relation(Relation::kAbsent),
                                          model.relation(Relation::kPresent), regularization);
}

double zero_filled_objective(const RescalModel& model, const EdgePartitions& parts, std::span<const Edge> negatives,
                             double regularization) {
  if (model.num_entities() != parts.num_vertices()) throw std::invalid_argument("model and partitions disagree on V");
  return zero_filled_problem(parts, negatives)
      .objective(model.entities(), model.relation(Relation::kAbsent), model.relation(Relation::kPresent),
                 regularization);
}

TrainResult train_fullset(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (cfg.mode != TrainMode::kFullSet) throw std::invalid_argument("train_fullset needs mode=fullset");
  if (cfg.resolved_init() == InitScheme::kEigen)
    throw std::invalid_argument("eigen initialisation is degenerate for FullSet (slices sum to all-ones)");
  TrainResult result = run_als(fullset_problem(parts), parts.num_vertices(), cfg, progress);
  result.num_training_pairs = parts.num_vertices() * parts.num_vertices();
  return result;
}

std::vector<LabeledPair> subset_training_pairs(const EdgePartitions& parts, std::size_t num_negatives,
                                               std::uint64_t seed) {
  std::vector<LabeledPair> pairs;
  pairs.reserve(parts.positives().size() + num_negatives);
  for (const Edge& e : parts.positives()) pairs.push_back({e.sub, e.obj, 1.0});
  for (const Edge& e : sample_complement(parts, num_negatives, seed)) pairs.push_back({e.sub, e.obj, 0.0});
  return pairs;
}

void sgd_step(RescalModel& model, std::span<const LabeledPair> batch, double learning_rate, double regularization) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) return;
  const auto d = static_cast<Eigen::Index>(model.dim());
  Matrix& emb = model.entities();
  Matrix& m0 = model.relation(Relation::kAbsent);
  Matrix& m1 = model.relation(Relation::kPresent);

  Matrix subs(n, d), objs(n, d);
  Vector labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    subs.row(i) = emb.row(batch[i].sub);
    objs.row(i) = emb.row(batch[i].obj);
    labels(i) = batch[i].label;
  }
  const Matrix m1b = objs * m1.transpose();  // row i: (M1 b_i)^T
  const Matrix m0b = objs * m0.transpose();
  const Matrix am1 = subs * m1;  // row i: a_i^T M1
  const Matrix am0 = subs * m0;
  const Vector r1 = subs.cwiseProduct(m1b).rowwise().sum() - labels;
  const Vector r0 = subs.cwiseProduct(m0b).rowwise().sum() - (Vector::Ones(n) - labels);

  const Matrix grad_sub = 2 * (r1.asDiagonal() * m1b + r0.asDiagonal() * m0b) + 2 * regularization * subs;
  const Matrix grad_obj = 2 * (r1.asDiagonal() * am1 + r0.asDiagonal() * am0) + 2 * regularization * objs;
  const double inv_n = 1.0 / static_cast<double>(n);
  const Matrix grad_m1 = 2 * inv_n * (subs.transpose() * r1.asDiagonal() * objs) + 2 * regularization * m1;
  const Matrix grad_m0 = 2 * inv_n * (subs.transpose() * r0.asDiagonal() * objs) + 2 * regularization * m0;

  for (Eigen::Index i = 0; i < n; ++i) {
    emb.row(batch[i].sub) -= learning_rate * grad_sub.row(i);
    emb.row(batch[i].obj) -= learning_rate * grad_obj.row(i);
  }
  m1 -= learning_rate * grad_m1;
  m0 -= learning_rate * grad_m0;
}

double mean_pair_loss(const RescalModel& model, std::span<const LabeledPair> pairs, double regularization) {
  if (pairs.empty()) return 0;
  const Matrix& emb = model.entities();
  const Matrix& m0 = model.relation(Relation::kAbsent);
  const Matrix& m1 = model.relation(Relation::kPresent);
  const double rel_norm = m0.squaredNorm() + m1.squaredNorm();
  double total = 0;
  Vector b;
  for (const LabeledPair& p : pairs) {
    b = emb.row(p.obj).transpose();
    const auto a = emb.row(p.sub);
    const double r1 = a.dot(m1 * b) - p.label;
    const double r0 = a.dot(m0 * b) - (1.0 - p.label);
    total += r1 * r1 + r0 * r0 + regularization * (a.squaredNorm() + b.squaredNorm() + rel_norm);
  }
  return total / static_cast<double>(pairs.size());
}

namespace {

std::size_t negative_count(const EdgePartitions& parts, const TrainConfig& cfg) {
  return std::min(parts.complement_size(), cfg.negatives_per_positive * parts.positives().size());
}

TrainResult train_subset_sgd(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress) {
  const std::size_t num_negatives = negative_count(parts, cfg);

  if (cfg.resolved_init() == InitScheme::kEigen)
    throw std::invalid_argument("eigen initialisation is only available for the ALS solver");
  RescalModel model = init_model(parts.num_vertices(), 2, cfg.dim, cfg.seed, cfg.effective_init_scale());
  std::vector<LabeledPair> pairs = subset_training_pairs(parts, num_negatives, mix_seed(cfg.seed, 1));
  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 2));

  TrainResult result{model, {}, 0, pairs.size()};
  double lr = cfg.learning_rate;
  double previous = mean_pair_loss(model, pairs, cfg.regularization);
  result.loss_history.push_back(previous);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.resample_negatives && epoch > 0)
      pairs = subset_training_pairs(parts, num_negatives, mix_seed(cfg.seed, 1000 + epoch));
    std::shuffle(pairs.begin(), pairs.end(), shuffle_rng);
    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, pairs.size() - start);
      sgd_step(model, std::span<const LabeledPair>(pairs).subspan(start, len), lr, cfg.regularization);
    }
    const double current = mean_pair_loss(model, pairs, cfg.regularization);
    if (!std::isfinite(current) || !model.all_finite()) {
      std::ostringstream msg;
      msg << "SGD diverged at epoch " << epoch << " (learning rate " << lr << ", previous loss " << previous << ")";
      throw NumericalError(msg.str());
    }
    if (current > previous * (1.0 - kPlateauTolerance)) lr *= cfg.lr_decay;
    previous = current;
    result.loss_history.push_back(current);
    if (progress) progress(epoch + 1, current);
  }
  model.provenance = provenance_for(cfg);
  result.model = std::move(model);
  return result;
}

TrainResult train_subset_als(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress) {
  if (cfg.resample_negatives) throw std::invalid_argument("resample_negatives applies to the SGD solver only");
  const std::vector<Edge> negatives = sample_complement(parts, negative_count(parts, cfg), mix_seed(cfg.seed, 1));
  TrainResult result = run_als(zero_filled_problem(parts, negatives), parts.num_vertices(), cfg, progress);
  result.num_training_pairs = parts.positives().size() + negatives.size();
  return result;
}

}  // namespace

TrainResult train_subset(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (cfg.mode != TrainMode::kSubSet) throw std::invalid_argument("train_subset needs mode=subset");
  return cfg.subset_solver == SubsetSolver::kAls ? train_subset_als(parts, cfg, progress)
                                                 : train_subset_sgd(parts, cfg, progress);
}

TrainResult train(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress) {
  return cfg.mode == TrainMode::kFullSet ? train_fullset(parts, cfg, progress) : train_subset(parts, cfg, progress);
}

}  // namespace rescal
