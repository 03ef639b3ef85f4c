#pragma once

// RESCAL parameters: one embedding row per entity and one d x d matrix per
// relation. The score of (v, r, v') is the bilinear form a_v^T M_r a_v'.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rescal/graph.hpp"

namespace rescal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// The two relations of the single-relation experiments.
enum class Relation : std::uint8_t { kAbsent = 0, kPresent = 1 };

constexpr std::size_t index_of(Relation r) noexcept { return static_cast<std::size_t>(r); }

class RescalModel {
 public:
  RescalModel(Matrix entities, std::vector<Matrix> relations);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entities_.cols()); }
  std::size_t num_entities() const noexcept { return static_cast<std::size_t>(entities_.rows()); }
  std::size_t num_relations() const noexcept { return relations_.size(); }

  /// Row v is a_v.
  const Matrix& entities() const noexcept { return entities_; }
  Matrix& entities() noexcept { return entities_; }
  const Matrix& relation(std::size_t r) const { return relations_.at(r); }
  Matrix& relation(std::size_t r) { return relations_.at(r); }
  const Matrix& relation(Relation r) const { return relation(index_of(r)); }
  Matrix& relation(Relation r) { return relation(index_of(r)); }

  double score(EntityId v, Relation r, EntityId w) const { return score(v, index_of(r), w); }
  double score(EntityId v, std::size_t r, EntityId w) const;

  /// argmax over {r0, r1}; exact ties go to r0.
  Relation predict_relation(EntityId v, EntityId w) const;
  /// score(v, r1, w) > score(v, r0, w).
  bool classify_pair(EntityId v, EntityId w) const;
  /// M_r1 - M_r0.
  Matrix difference_matrix() const;

  bool all_finite() const;
  double squared_norm() const;

  /// Free-form provenance (seed and training config) carried through
  /// serialization.
  std::string provenance;

  friend bool operator==(const RescalModel& a, const RescalModel& b);

 private:
  void check_entity(EntityId v) const;

  Matrix entities_;
  std::vector<Matrix> relations_;
};

/// Entries i.i.d. uniform in (-scale, scale) from a seeded mt19937_64.
RescalModel init_model(std::size_t num_entities, std::size_t num_relations, std::size_t dim,
                       std::uint64_t seed, double scale);

/// Default initialisation scale, 1/sqrt(d).
double default_init_scale(std::size_t dim);

// Binary container, little-endian:
//   "RESCALM1" | u64 d | u64 V | u64 R | u64 provenance bytes | provenance |
//   V*d f64 row-major embeddings | R * d*d f64 row-major relation matrices
void save_model(std::ostream& out, const RescalModel& model);
RescalModel load_model(std::istream& in);
void save_model(const std::filesystem::path& path, const RescalModel& model);
RescalModel load_model(const std::filesystem::path& path);

/// Plain text: one row per line, entries separated by single spaces, printed
/// with enough digits to round-trip exactly.
void write_matrix_text(std::ostream& out, const Matrix& m);
Matrix read_matrix_text(std::istream& in);

}  // namespace rescal
