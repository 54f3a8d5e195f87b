#ifndef RNMAX_HARNESS_HPP
#define RNMAX_HARNESS_HPP

// Monte Carlo driver for the two simulation experiments: sweeps, replication
// streams, MISE = ISB + IV on the edge grid, deterministic parallelism.

#include "rnmax/estimators.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace rnmax {

using EstimatorPair = std::pair<PickandsMethod, AlphaMethod>;

std::vector<EstimatorPair> all_estimator_pairs();

struct ExperimentConfig {
  int experiment = 1;
  std::vector<double> alphas{0.5};
  std::vector<double> psis;        // experiment 1
  std::vector<double> rhos;        // experiment 2
  std::vector<double> nus{1.0};    // experiment 2 (t degrees of freedom)
  std::vector<int> ns{50};
  int replications = 200;
  int n_prime = 500;
  std::vector<EstimatorPair> pairs = all_estimator_pairs();
  int k = 5;
  int grid_m = 201;
  bool correct = true;
  MdNormalizer md_normalizer = MdNormalizer::Mean;
  MlScale ml_scale = MlScale::Profile;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::uint64_t block_cap = kBlockSizeCap;
  bool record_timing = false;
  /// Every replication reuses the stream of replication 0 (diagnostics).
  bool identical_replications = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Combo {
  int experiment = 1;
  double alpha = 0.5;
  double dependence = 0.5;  // psi (exp. 1) or rho (exp. 2)
  double nu = 0.0;          // exp. 2 only
  int n = 50;
};

std::vector<Combo> enumerate_combos(const ExperimentConfig& config);

/// Stable stream id for replication r of a combo.
std::uint64_t replication_stream(const Combo& combo, int r);

/// A* of the data-generating model on the edge grid.
Vector truth_curve(const Combo& combo, const Vector& grid);

/// Trapezoid weights on an increasing grid.
Vector trapezoid_weights(const Vector& grid);

struct MiseParts {
  double mise = 0.0;
  double isb = 0.0;
  double iv = 0.0;
};

/// curves: R x m. ISB = int (mean - truth)^2, IV = int mean_r (curve_r - mean)^2,
/// MISE = ISB + IV.
MiseParts mise_decompose(const Matrix& curves, const Vector& truth, const Vector& grid);

struct PairResult {
  EstimatorPair pair;
  MiseParts mise;
  int replications = 0;  // requested
  int failures = 0;
  int clamps = 0;           // alpha clamped to 1 - 1e-6
  int envelope_clamps = 0;  // replications with any clamped A* node
  bool flagged = false;     // failures > 20%
  Vector ise;               // per successful replication, replication order
  Vector mean_curve;
  double ise_stderr() const;
};

struct ComboResult {
  Combo combo;
  Vector truth;
  std::vector<PairResult> pairs;
  std::uint64_t cap_hits = 0;
  double wall_ms = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  Vector grid;
  std::vector<ComboResult> combos;
};

using ProgressFn = std::function<void(const ComboResult&, std::size_t index, std::size_t total)>;

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Runs a single combo; exposed for tests.
ComboResult run_combo(const ExperimentConfig& config, const Combo& combo, const Vector& grid);

}  // namespace rnmax

#endif  // RNMAX_HARNESS_HPP
