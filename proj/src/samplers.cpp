#include "rnmax/samplers.hpp"

#include "rnmax/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rnmax {

namespace {

void check_unit_open(double a, const char* who, double hi = 1.0) {
  if (!(a > 0.0 && a <= hi)) throw std::invalid_argument(std::string(who) + ": parameter out of range");
}

}  // namespace

void PairedSample::validate() const {
  if (xi.size() < 2) throw std::invalid_argument("sample: need at least 2 observations");
  if (eta.rows() != xi.size()) throw std::invalid_argument("sample: eta and xi row counts differ");
  if (eta.cols() < 2) throw std::invalid_argument("sample: eta must have at least 2 columns");
  if (!eta.allFinite()) throw std::invalid_argument("sample: eta has non-finite entries");
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    if (!(xi[i] > 0.0) || !std::isfinite(xi[i]))
      throw std::invalid_argument("sample: xi must be positive and finite (row " +
                                  std::to_string(i + 1) + ")");
  }
}

// Kanter's representation (Chambers-Mallows-Stuck with beta = 1), evaluated
// in logs so that alpha near 0 does not overflow.
double sample_log_positive_stable(double alpha, RngStream& rng) {
  check_unit_open(alpha, "positive_stable");
  if (alpha == 1.0) return 0.0;
  const double u = specfun::kPi * rng.uniform();
  const double e = rng.exponential();
  return std::log(std::sin(alpha * u)) - std::log(std::sin(u)) / alpha +
         (1.0 - alpha) / alpha * (std::log(std::sin((1.0 - alpha) * u)) - std::log(e));
}

double sample_positive_stable(double alpha, RngStream& rng) {
  return std::exp(sample_log_positive_stable(alpha, rng));
}

Vector sample_log_logistic_maxstable(double psi, int d, RngStream& rng) {
  check_unit_open(psi, "logistic");
  if (d < 2) throw std::invalid_argument("logistic: d must be >= 2");
  const double ls = sample_log_positive_stable(psi, rng);
  Vector z(d);
  for (int j = 0; j < d; ++j) z[j] = psi * (ls - std::log(rng.exponential()));
  return z;
}

Vector sample_logistic_maxstable(double psi, int d, RngStream& rng) {
  return sample_log_logistic_maxstable(psi, d, rng).array().exp().matrix();
}

PairedSample sample_experiment1(double psi, double alpha, int n, RngStream& rng, int d) {
  check_unit_open(alpha, "experiment1 alpha");
  if (n < 1) throw std::invalid_argument("experiment1: n must be positive");
  PairedSample out;
  out.eta.resize(n, d);
  out.xi.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vector lz = sample_log_logistic_maxstable(psi, d, rng);
    const double ls = sample_log_positive_stable(alpha, rng);
    for (int j = 0; j < d; ++j) out.eta(i, j) = std::exp(ls + lz[j]);
    out.xi[i] = out.eta.row(i).maxCoeff();
  }
  out.meta = {{"experiment", "1"}, {"psi", std::to_string(psi)}, {"alpha", std::to_string(alpha)}};
  return out;
}

std::uint64_t pareto_block_size_from_uniform(double alpha, double u, std::uint64_t cap) {
  if (!(alpha > 0.0)) throw std::invalid_argument("block size: alpha must be positive");
  if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("block size: u must lie in (0, 1]");
  const double x = std::ceil(std::pow(u, -1.0 / alpha));
  if (!(x < static_cast<double>(cap))) return cap;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(x));
}

std::uint64_t sample_pareto_block_size(double alpha, RngStream& rng, std::uint64_t cap) {
  return pareto_block_size_from_uniform(alpha, rng.uniform(), cap);
}

Eigen::Vector2d sample_bivariate_t(double rho, double nu, RngStream& rng) {
  if (!(rho > -1.0 && rho < 1.0) || !(nu > 0.0))
    throw std::invalid_argument("bivariate t: need |rho| < 1 and nu > 0");
  const double g1 = rng.normal();
  const double g2 = rng.normal();
  const double w = std::sqrt(nu / (2.0 * rng.gamma(0.5 * nu)));
  return {w * g1, w * (rho * g1 + std::sqrt(1.0 - rho * rho) * g2)};
}

Eigen::Vector2d max_bivariate_t(double rho, double nu, std::uint64_t m, RngStream& rng) {
  if (!(rho > -1.0 && rho < 1.0) || !(nu > 0.0))
    throw std::invalid_argument("bivariate t: need |rho| < 1 and nu > 0");
  if (m == 0) throw std::invalid_argument("max_bivariate_t: m must be positive");
  const double c = std::sqrt(1.0 - rho * rho);
  const double inf = std::numeric_limits<double>::infinity();
  double m1 = -inf, m2 = -inf;
  // P(R > r) = (1 + r^2 / nu)^{-nu/2}; s is the survival value of the k-th
  // largest radius among m, i.e. the k-th smallest of m uniforms, so radii
  // come out in descending order.
  double s = 0.0;
  for (std::uint64_t k = 0; k < m; ++k) {
    const double lb = std::log(rng.uniform());
    s += (1.0 - s) * -std::expm1(lb / static_cast<double>(m - k));
    const double r = s > 0.0 ? std::sqrt(nu * std::expm1(-2.0 / nu * std::log(s))) : inf;
    if (r <= std::min(m1, m2)) break;
    const double phi = 2.0 * specfun::kPi * rng.uniform();
    const double cp = std::cos(phi), sp = std::sin(phi);
    m1 = std::max(m1, r * cp);
    m2 = std::max(m2, r * (rho * cp + c * sp));
  }
  return {m1, m2};
}

Eigen::Vector2d max_bivariate_t_bruteforce(double rho, double nu, std::uint64_t m,
                                           RngStream& rng) {
  if (m == 0) throw std::invalid_argument("max_bivariate_t: m must be positive");
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::Vector2d out(-inf, -inf);
  for (std::uint64_t k = 0; k < m; ++k) out = out.cwiseMax(sample_bivariate_t(rho, nu, rng));
  return out;
}

Experiment2Sample sample_experiment2(double rho, double nu, double alpha, int n,
                                     const Experiment2Options& options, RngStream& rng) {
  check_unit_open(alpha, "experiment2 alpha");
  if (n < 1 || options.n_prime < 1)
    throw std::invalid_argument("experiment2: n and n_prime must be positive");
  Experiment2Sample out;
  PairedSample& ps = out.sample;
  ps.eta.resize(n, 2);
  ps.xi.resize(n);
  for (int i = 0; i < n; ++i) {
    std::uint64_t total = 0, biggest = 0;
    for (int k = 0; k < options.n_prime; ++k) {
      std::uint64_t nk;
      if (options.forced_block_size) {
        nk = *options.forced_block_size;
      } else {
        nk = sample_pareto_block_size(alpha, rng, options.cap);
        if (nk >= options.cap) ++out.cap_hits;
      }
      total += nk;
      biggest = std::max(biggest, nk);
    }
    // max over blocks of block maxima = max over all pooled draws
    const Eigen::Vector2d mx = max_bivariate_t(rho, nu, total, rng);
    ps.eta(i, 0) = mx[0];
    ps.eta(i, 1) = mx[1];
    ps.xi[i] = static_cast<double>(biggest);
  }
  ps.meta = {{"experiment", "2"},
             {"rho", std::to_string(rho)},
             {"nu", std::to_string(nu)},
             {"alpha", std::to_string(alpha)},
             {"n_prime", std::to_string(options.n_prime)},
             {"cap_hits", std::to_string(out.cap_hits)}};
  return out;
}

Vector sample_poisson_spectral(double alpha, double psi, int d, RngStream& rng, double eps) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("poisson spectral: alpha in (0,1)");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("poisson spectral: eps in (0,1)");
  const double log_eps = std::log(eps);
  Vector lm = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  double arrival = 0.0;
  for (;;) {
    arrival += rng.exponential();
    const double lp = -std::log(arrival) / alpha;
    if (std::isfinite(lm.minCoeff()) && lp < log_eps + lm.minCoeff()) break;
    const Vector lz = sample_log_logistic_maxstable(psi, d, rng);
    lm = lm.cwiseMax((lz.array() + lp).matrix());
  }
  const double lc = -specfun::ln_gamma(1.0 - alpha) / alpha;
  return (lm.array() + lc).exp().matrix();
}

}  // namespace rnmax
