#include "rescal/matrix_theory.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "rescal/errors.hpp"

namespace rescal {

namespace {

double form(const Matrix& m, const Vector& a, const Vector& b) { return a.dot(m * b); }

Vector random_unit(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> normal;
  Vector v(d);
  do {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
  } while (v.squaredNorm() == 0.0);
  return v.normalized();
}

void require_square(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument("matrix must be square and non-empty");
}

}  // namespace

WitnessTriple make_triple(const Matrix& m, Vector a, Vector b, Vector c) {
  WitnessTriple w{std::move(a), std::move(b), std::move(c)};
  w.ab = form(m, w.a, w.b);
  w.bc = form(m, w.b, w.c);
  w.ac = form(m, w.a, w.c);
  return w;
}

bool verify_witness(const Matrix& m, const WitnessTriple& w, double tol) {
  const auto d = m.rows();
  if (w.a.size() != d || w.b.size() != d || w.c.size() != d) return false;
  return form(m, w.a, w.b) > tol && form(m, w.b, w.c) > tol && form(m, w.a, w.c) <= 0;
}

double symmetry_defect(const Matrix& m) {
  require_square(m);
  return (m - m.transpose()).norm() / std::max(m.norm(), 1e-12);
}

std::optional<WitnessTriple> sampled_transitivity_check(const Matrix& m, std::size_t samples, double tol,
                                                        std::uint64_t seed) {
  require_square(m);
  std::mt19937_64 rng(seed);
  const auto d = m.rows();
  for (std::size_t k = 0; k < samples; ++k) {
    Vector a = random_unit(rng, d);
    Vector b = random_unit(rng, d);
    Vector c = random_unit(rng, d);
    WitnessTriple w = make_triple(m, std::move(a), std::move(b), std::move(c));
    if (w.ab > tol && w.bc > tol && w.ac <= 0) return w;
  }
  return std::nullopt;
}

Vector separating_vector(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vectors differ in length");
  const double xx = x.squaredNorm(), yy = y.squaredNorm(), xy = x.dot(y);
  if (xx == 0 || yy == 0) throw std::invalid_argument("separating_vector needs nonzero vectors");
  const double det = xy * xy - xx * yy;
  if (std::abs(det) <= 1e-12 * xx * yy) {
    throw NumericalError(xy > 0 ? "no separating vector: x is a positive multiple of y"
                                : "x is a negative multiple of y; z^T x = 1 and z^T y = -1 cannot both hold");
  }
  const double alpha = -(xy + yy) / det;
  const double beta = (xy + xx) / det;
  return alpha * x + beta * y;
}

ChainReport psd_chain_probe(const Matrix& m, const Vector& x, double tol) {
  require_square(m);
  if (x.size() != m.rows()) throw std::invalid_argument("vector length does not match matrix");
  ChainReport r;
  r.x = x;
  r.b = m * x;
  r.a = m * r.b;
  r.hyp_ab = form(m, r.a, r.b);
  r.hyp_bc = form(m, r.b, r.x);
  r.conclusion = form(m, r.a, r.x);
  // b = 0 or Mb = 0 leaves a hypothesis at zero: never a witness.
  if (r.hyp_ab > tol && r.hyp_bc > tol && r.conclusion <= 0) r.witness = make_triple(m, r.a, r.b, r.x);
  return r;
}

namespace {

// Removes the symmetric cross term x^T Sym y while keeping x^T Skew y.
// Returns false when neither vector has a usable quadratic form.
bool cancel_symmetric_part(const Matrix& sym, Vector& x, Vector& y, double eps) {
  const double cross = x.dot(sym * y);
  if (std::abs(cross) <= eps) return true;
  const double qx = x.dot(sym * x);
  if (std::abs(qx) > eps) {
    y -= (cross / qx) * x;  // x^T Skew x = 0, so the skew term is unchanged
    return true;
  }
  const double qy = y.dot(sym * y);
  if (std::abs(qy) > eps) {
    x -= (cross / qy) * y;
    return true;
  }
  return false;
}

bool is_swap_pair(const Matrix& m, const Vector& x, const Vector& y, double tol) {
  return form(m, x, y) > tol && form(m, y, x) < -tol;
}

}  // namespace

std::optional<std::pair<Vector, Vector>> swap_sign_pair(const Matrix& m, double tol, std::uint64_t seed) {
  require_square(m);
  if (symmetry_defect(m) <= tol) return std::nullopt;
  const Matrix skew = 0.5 * (m - m.transpose());
  const Matrix sym = 0.5 * (m + m.transpose());
  const double eps = 1e-12 * std::max(sym.norm(), 1e-300);

  // x^T Skew y = sigma for singular pairs (u_k, v_k); try the strongest first.
  Eigen::JacobiSVD<Matrix> svd(skew, Eigen::ComputeFullU | Eigen::ComputeFullV);
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    if (svd.singularValues()(k) <= tol) break;
    Vector x = svd.matrixU().col(k);
    Vector y = svd.matrixV().col(k);
    if (cancel_symmetric_part(sym, x, y, eps) && is_swap_pair(m, x, y, tol)) return std::make_pair(x, y);
  }

  std::mt19937_64 rng(seed);
  const auto d = m.rows();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vector x = random_unit(rng, d);
    Vector y = random_unit(rng, d);
    if (!cancel_symmetric_part(sym, x, y, eps)) continue;
    if (x.dot(skew * y) < 0) y = -y;
    if (is_swap_pair(m, x, y, tol)) return std::make_pair(x, y);
  }
  return std::nullopt;
}

WitnessResult find_transitivity_violation(const Matrix& m, double tol, std::uint64_t seed) {
  require_square(m);
  if (symmetry_defect(m) <= tol)
    throw std::invalid_argument("matrix is symmetric to within tolerance; no asymmetry to exploit");

  // (x, y) with x^T M y > 0 and y^T M x < 0 gives two positive links
  // x -> y -> -x; the chain closes with -x^T M x, a violation unless
  // x^T M x < 0. The mirrored chain y -> -x -> -y closes with -y^T M y.
  if (auto pair = swap_sign_pair(m, tol, seed)) {
    const auto& [x, y] = *pair;
    WitnessTriple forward = make_triple(m, x, y, -x);
    if (verify_witness(m, forward, tol)) return {forward, WitnessRoute::kSwapPair};
    WitnessTriple mirrored = make_triple(m, y, -x, -y);
    if (verify_witness(m, mirrored, tol)) return {mirrored, WitnessRoute::kSwapPair};
  }

  // Both quadratic forms negative: M is not PSD. The chain x, Mx, M^2 x
  // fails as soon as b = Mx lands in a direction with b^T M b < 0, e.g. a
  // negative eigenvector of the symmetric part.
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Eigen::CompleteOrthogonalDecomposition<Matrix> solver(m);
  std::vector<Vector> candidates;
  for (Eigen::Index k = 0; k < sym.rows(); ++k) {
    if (eig.eigenvalues()(k) >= 0) break;
    const Vector e = eig.eigenvectors().col(k);
    candidates.push_back(solver.solve(e));
    candidates.push_back(e);
  }
  for (const Vector& x : candidates) {
    ChainReport r = psd_chain_probe(m, x, tol);
    if (r.witness && verify_witness(m, *r.witness, tol)) return {*r.witness, WitnessRoute::kChainProbe};
  }
  std::mt19937_64 rng(seed ^ 0x5DEECE66Dull);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ChainReport r = psd_chain_probe(m, random_unit(rng, m.rows()), tol);
    if (r.witness && verify_witness(m, *r.witness, tol)) return {*r.witness, WitnessRoute::kChainProbe};
  }

  if (auto w = sampled_transitivity_check(m, 100000, tol, seed); w && verify_witness(m, *w, tol))
    return {*w, WitnessRoute::kSampling};
  throw NumericalError("witness search budget exhausted without a certified violation");
}

double proportionality_factor(const Matrix& m1, const Matrix& m2, const Vector& x) {
  require_square(m1);
  if (m1.rows() != m2.rows() || m2.rows() != m2.cols() || x.size() != m1.rows())
    throw std::invalid_argument("dimension mismatch");
  const double den = x.dot(m2 * (m2 * x));
  if (std::abs(den) <= 1e-12) throw NumericalError("proportionality factor undefined: x^T M2 M2 x vanishes");
  return x.dot(m1 * (m2 * x)) / den;
}

const char* to_string(WitnessRoute route) {
  switch (route) {
    case WitnessRoute::kSwapPair: return "swap-pair";
    case WitnessRoute::kChainProbe: return "chain-probe";
    case WitnessRoute::kSampling: return "sampling";
  }
  return "unknown";
}

void write_witness(std::ostream& out, const WitnessTriple& w) {
  const auto old_precision = out.precision(17);
  auto vec = [&](const char* name, const Vector& v) {
    out << name << ':';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v(i);
    out << '\n';
  };
  vec("a", w.a);
  vec("b", w.b);
  vec("c", w.c);
  out << "a^T M b: " << w.ab << '\n' << "b^T M c: " << w.bc << '\n' << "a^T M c: " << w.ac << '\n';
  out.precision(old_precision);
}

}  // namespace rescal
