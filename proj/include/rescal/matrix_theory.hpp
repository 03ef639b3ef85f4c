#pragma once

// Transitive matrices: M is transitive when a^T M b > 0 and b^T M c > 0
// force a^T M c > 0 for every a, b, c. Every transitive matrix is symmetric
// (and PSD), so an asymmetric M always admits a violating triple. The
// operations here measure asymmetry, search for violations, and build them
// constructively with a certificate that can be re-checked.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>

#include "rescal/model.hpp"

namespace rescal {

/// Strict-inequality margin for bilinear forms.
inline constexpr double kDefaultTolerance = 1e-9;

/// a, b, c with a^T M b > tol, b^T M c > tol and a^T M c <= 0.
struct WitnessTriple {
  Vector a, b, c;
  double ab = 0;  // a^T M b
  double bc = 0;  // b^T M c
  double ac = 0;  // a^T M c
};

/// Recomputes the three forms from scratch and checks the certificate.
bool verify_witness(const Matrix& m, const WitnessTriple& w, double tol = kDefaultTolerance);

/// Builds a triple and fills in its three bilinear values.
WitnessTriple make_triple(const Matrix& m, Vector a, Vector b, Vector c);

/// ||M - M^T||_F / max(||M||_F, 1e-12).
double symmetry_defect(const Matrix& m);

/// First of `samples` triples of uniform unit vectors that violates
/// transitivity, or nothing.
std::optional<WitnessTriple> sampled_transitivity_check(const Matrix& m, std::size_t samples,
                                                        double tol, std::uint64_t seed);

/// z = alpha x + beta y with z^T x = 1 and z^T y = -1, where
/// D = (x^T y)^2 - (x^T x)(y^T y), alpha = -(x^T y + y^T y) / D,
/// beta = (x^T y + x^T x) / D. Throws NumericalError when x and y are
/// parallel (|D| <= 1e-12 (x^T x)(y^T y)).
Vector separating_vector(const Vector& x, const Vector& y);

/// The chain c = x, b = M x, a = M b. Its hypotheses a^T M b = ||Mb||^2 and
/// b^T M c = ||b||^2 are non-negative by construction, and the conclusion is
/// a^T M c = b^T M b; a negative conclusion certifies M is not transitive.
struct ChainReport {
  Vector x, b, a;
  double hyp_ab = 0;      // a^T M b
  double hyp_bc = 0;      // b^T M c
  double conclusion = 0;  // a^T M c
  std::optional<WitnessTriple> witness;
};

ChainReport psd_chain_probe(const Matrix& m, const Vector& x, double tol = kDefaultTolerance);

/// (x, y) with x^T M y > tol and x^T M^T y < -tol, built from the top
/// singular pair of the skew part with the symmetric cross term cancelled.
/// Nothing for (numerically) symmetric M.
std::optional<std::pair<Vector, Vector>> swap_sign_pair(const Matrix& m, double tol = kDefaultTolerance,
                                                        std::uint64_t seed = 0);

/// Which route produced a witness.
enum class WitnessRoute { kSwapPair, kChainProbe, kSampling };

struct WitnessResult {
  WitnessTriple triple;
  WitnessRoute route = WitnessRoute::kSwapPair;
};

/// Certified violation for an asymmetric M. Throws std::invalid_argument
/// when symmetry_defect(M) <= tol and NumericalError when every route fails.
WitnessResult find_transitivity_violation(const Matrix& m, double tol = kDefaultTolerance, std::uint64_t seed = 0);

inline WitnessTriple transitivity_violation_witness(const Matrix& m, double tol = kDefaultTolerance,
                                                    std::uint64_t seed = 0) {
  return find_transitivity_violation(m, tol, seed).triple;
}

/// x^T M1 M2 x / x^T M2 M2 x. Throws NumericalError when the denominator
/// is within 1e-12 of zero.
double proportionality_factor(const Matrix& m1, const Matrix& m2, const Vector& x);

const char* to_string(WitnessRoute route);

/// Vectors and the three bilinear values, one item per line.
void write_witness(std::ostream& out, const WitnessTriple& w);

}  // namespace rescal
