#ifndef RNMAX_SAMPLERS_HPP
#define RNMAX_SAMPLERS_HPP

// Random generation for the two simulation experiments. Every sampler is a
// pure function of its parameters and the RngStream it consumes.

#include "rnmax/depcore.hpp"
#include "rnmax/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rnmax {

/// n observations of (eta in R^d, xi > 0).
struct PairedSample {
  Matrix eta;  // n x d
  Vector xi;   // n
  std::vector<std::pair<std::string, std::string>> meta;

  int n() const { return static_cast<int>(xi.size()); }
  int dim() const { return static_cast<int>(eta.cols()); }
  /// Throws std::invalid_argument unless n >= 2, shapes agree, eta is finite
  /// and xi is strictly positive and finite.
  void validate() const;
};

inline constexpr std::uint64_t kBlockSizeCap = 10'000'000;

/// ln S for S positive alpha-stable with E exp(-sS) = exp(-s^alpha).
double sample_log_positive_stable(double alpha, RngStream& rng);
double sample_positive_stable(double alpha, RngStream& rng);

/// Logistic(psi) max-stable vector with unit-Frechet margins, built as
/// Z_j = (S_psi Y_j)^psi with Y_j iid unit Frechet.
Vector sample_logistic_maxstable(double psi, int d, RngStream& rng);
Vector sample_log_logistic_maxstable(double psi, int d, RngStream& rng);

/// Experiment 1: eta = S_alpha Z with Z logistic(psi), xi = max_j eta_j.
PairedSample sample_experiment1(double psi, double alpha, int n, RngStream& rng, int d = 2);

/// N = ceil(u^{-1/alpha}), truncated at cap.
std::uint64_t pareto_block_size_from_uniform(double alpha, double u,
                                             std::uint64_t cap = kBlockSizeCap);
std::uint64_t sample_pareto_block_size(double alpha, RngStream& rng,
                                       std::uint64_t cap = kBlockSizeCap);

/// Standard bivariate Student-t draw with correlation rho.
Eigen::Vector2d sample_bivariate_t(double rho, double nu, RngStream& rng);

/// Componentwise maximum of m iid bivariate-t draws, simulated exactly by
/// visiting the draws in decreasing order of their radius
/// R = W ||N|| (R^2 / 2 ~ F(2, nu)) and stopping once R cannot beat either
/// running maximum.
Eigen::Vector2d max_bivariate_t(double rho, double nu, std::uint64_t m, RngStream& rng);

/// Same law as max_bivariate_t, by drawing all m vectors.
Eigen::Vector2d max_bivariate_t_bruteforce(double rho, double nu, std::uint64_t m,
                                           RngStream& rng);

struct Experiment2Options {
  int n_prime = 500;
  std::uint64_t cap = kBlockSizeCap;
  /// Replaces the Pareto block size when set (degenerate-pipeline checks).
  std::optional<std::uint64_t> forced_block_size;
};

struct Experiment2Sample {
  PairedSample sample;
  std::uint64_t cap_hits = 0;
};

/// Experiment 2: per observation, n' pairs (N_k, M_{N_k}) over bivariate-t
/// data; xi = max_k N_k, eta = componentwise max_k M_{N_k}.
Experiment2Sample sample_experiment2(double rho, double nu, double alpha, int n,
                                     const Experiment2Options& options, RngStream& rng);

/// Poisson spectral construction of G_{*alpha} with logistic(psi) spectral
/// vectors: R = Gamma(1-alpha)^{-1/alpha} max_i P_i Z_i, P_i the points of a
/// Poisson process with intensity alpha r^{-alpha-1} dr. Points below
/// eps * min_j(current max_j) are dropped.
Vector sample_poisson_spectral(double alpha, double psi, int d, RngStream& rng,
                               double eps = 1e-6);

}  // namespace rnmax

#endif  // RNMAX_SAMPLERS_HPP
