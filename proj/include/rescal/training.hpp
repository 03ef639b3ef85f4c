#pragma once

// Fitting RESCAL under the two protocols:
//   FullSet  every ordered pair observed (E in slice r1, E^c in slice r0);
//            alternating least squares.
//   SubSet   E plus an equal-size sample of E^c. Default solver is the same
//            ALS over the V x V grid with unobserved pairs zero in both
//            slices, started from the leading eigenvectors of the slices;
//            mini-batch SGD over the observed pairs only is the alternative.
// All solvers minimise squared error on the r1 and r0 slices plus L2 on all
// parameters.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "rescal/graph.hpp"
#include "rescal/model.hpp"

namespace rescal {

enum class TrainMode { kFullSet, kSubSet };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view text);

enum class SubsetSolver { kAls, kSgd };

std::string to_string(SubsetSolver solver);
SubsetSolver parse_subset_solver(std::string_view text);

/// kAuto: eigen for SubSet ALS, uniform otherwise.
enum class InitScheme { kAuto, kUniform, kEigen };

std::string to_string(InitScheme init);
InitScheme parse_init_scheme(std::string_view text);

struct TrainConfig {
  std::size_t dim = 50;
  TrainMode mode = TrainMode::kFullSet;
  std::size_t sweeps = 30;   // ALS
  std::size_t epochs = 200;  // SGD
  double learning_rate = 0.05;
  double lr_decay = 0.5;
  double regularization = 0.01;
  std::uint64_t seed = 0;
  std::optional<double> init_scale;  // 1/sqrt(dim) when unset
  std::size_t negatives_per_positive = 1;
  bool resample_negatives = false;
  std::size_t batch_size = 128;
  SubsetSolver subset_solver = SubsetSolver::kAls;
  InitScheme init = InitScheme::kAuto;

  /// The scheme kAuto resolves to for this mode and solver.
  InitScheme resolved_init() const;
  double effective_init_scale() const;
  void validate() const;
  /// Canonical key=value text; parse_train_config(to_text()) is the identity.
  std::string to_text() const;
};

/// Applies one `key=value` setting. Returns false for keys it does not know.
bool apply_train_setting(TrainConfig& cfg, std::string_view key, std::string_view value);

/// Line-oriented key=value; '#' starts a comment. Unknown keys are errors.
TrainConfig parse_train_config(std::istream& in);

struct LabeledPair {
  EntityId sub = 0;
  EntityId obj = 0;
  double label = 0.0;  // 1 for pairs in E, 0 otherwise
};

/// Squared residuals of one pair on both slices, no regularisation.
double pair_data_loss(const RescalModel& model, const LabeledPair& pair);

/// Data terms over `pairs` plus reg * ||Theta||^2 (every parameter once).
double loss(const RescalModel& model, std::span<const LabeledPair> pairs, double regularization);

/// Per-pair objective used by SGD: data terms plus
/// reg * (||a_sub||^2 + ||a_obj||^2 + ||M_r0||^2 + ||M_r1||^2).
/// A self-pair counts its row twice, once per role.
double pair_loss(const RescalModel& model, const LabeledPair& pair, double regularization);

/// Gradient of pair_loss. `sub` and `obj` are the partials for each role;
/// the total derivative for an entity row is the sum over roles it plays.
struct PairGradient {
  Vector sub;
  Vector obj;
  Matrix absent;   // d/dM_r0
  Matrix present;  // d/dM_r1
};

PairGradient gradient(const RescalModel& model, const LabeledPair& pair, double regularization);

/// Full objective over all V^2 pairs (E labelled 1, E^c labelled 0),
/// computed in closed form without touching every pair.
double fullset_objective(const RescalModel& model, const EdgePartitions& parts, double regularization);

/// Objective of the SubSet ALS problem: E labelled (1, 0), `negatives`
/// labelled (0, 1), every other ordered pair (0, 0), plus reg * ||Theta||^2.
double zero_filled_objective(const RescalModel& model, const EdgePartitions& parts, std::span<const Edge> negatives,
                             double regularization);

/// The k eigenvectors of a symmetric matrix with largest eigenvalues, as
/// columns, in descending eigenvalue order. Dense solver up to
/// kDenseEigenLimit rows, seeded subspace iteration above.
inline constexpr std::size_t kDenseEigenLimit = 4096;
Matrix leading_eigenvectors(const Eigen::SparseMatrix<double>& symmetric, std::size_t k, std::uint64_t seed);

struct TrainResult {
  RescalModel model;
  /// ALS: objective after initialisation then after each sweep.
  /// SGD: mean pair_loss over the training pairs, same layout per epoch.
  std::vector<double> loss_history;
  /// ALS: sweeps whose embedding step needed damping to stay monotone.
  std::size_t damped_steps = 0;
  /// Pairs carrying an explicit label: V^2 for FullSet, |E| + negatives
  /// for SubSet.
  std::size_t num_training_pairs = 0;
};

using ProgressFn = std::function<void(std::size_t step, double loss)>;

TrainResult train_fullset(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress = {});
TrainResult train_subset(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress = {});
TrainResult train(const EdgePartitions& parts, const TrainConfig& cfg, const ProgressFn& progress = {});

/// Relative epoch-over-epoch improvement below which SGD decays its
/// learning rate by `lr_decay`.
inline constexpr double kPlateauTolerance = 1e-3;

/// One mini-batch update. Gradients are taken at the parameters on entry;
/// entity rows move by the summed gradient of the pairs that touch them,
/// relation matrices by the batch mean.
void sgd_step(RescalModel& model, std::span<const LabeledPair> batch, double learning_rate, double regularization);

/// Mean of pair_loss over `pairs`.
double mean_pair_loss(const RescalModel& model, std::span<const LabeledPair> pairs, double regularization);

/// E (label 1) followed by `num_negatives` sampled E^c pairs (label 0).
std::vector<LabeledPair> subset_training_pairs(const EdgePartitions& parts, std::size_t num_negatives,
                                               std::uint64_t seed);

}  // namespace rescal
