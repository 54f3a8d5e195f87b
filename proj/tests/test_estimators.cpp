#include "rnmax/estimators.hpp"
#include "rnmax/specfun.hpp"
#include "stat_util.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace rnmax;

namespace {

Vector frechet_sample(double alpha, int n, RngStream& rng, double scale = 1.0) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = scale * std::pow(rng.exponential(), -1.0 / alpha);
  return x;
}

// u_ij = exp(-1/Z_ij) for logistic(psi) Z: an exact extreme-value copula sample
Matrix logistic_uniforms(double psi, int n, RngStream& rng) {
  Matrix u(n, 2);
  for (int i = 0; i < n; ++i) {
    const Vector z = sample_logistic_maxstable(psi, 2, rng);
    u(i, 0) = std::exp(-1.0 / z[0]);
    u(i, 1) = std::exp(-1.0 / z[1]);
  }
  return u;
}

double gpwm_population_mu(double alpha, int b) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [&](double v) {
    const double l = -std::log(v);
    return std::pow(l, -1.0 / alpha) * v * std::pow(l, b);
  };
  return integrator.integrate(f, 0.0, 1.0);
}

}  // namespace

TEST(Margins, RanksUseLargestTiedRank) {
  Matrix eta(4, 2);
  eta << 1.0, 5.0, 2.0, 5.0, 2.0, 1.0, 0.5, 7.0;
  const EmpiricalMargins m(eta);
  EXPECT_DOUBLE_EQ(m.cdf_at_obs()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.cdf_at_obs()(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.cdf_at_obs()(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.cdf_at_obs()(0, 1), 0.75);
  EXPECT_DOUBLE_EQ(m.G(0, 1.5), 0.5);
  EXPECT_DOUBLE_EQ(m.G(1, 0.0), 0.0);
  EXPECT_THROW(m.H(1.0), std::logic_error);
}

TEST(Gpwm, PopulationIdentityUnderQuadrature) {
  for (double a : {0.3, 0.5, 0.7, 0.9}) {
    for (int k : {4, 5, 6}) {
      if (!(a > 1.0 / (k - 1))) continue;
      const double r = k - 2.0 * gpwm_population_mu(a, k) / gpwm_population_mu(a, k - 1);
      EXPECT_NEAR(1.0 / r, a, 1e-10) << a << " " << k;
    }
  }
  // closed form used as a cross-check of the quadrature itself
  EXPECT_NEAR(gpwm_population_mu(0.5, 4), 0.25, 1e-12);
  EXPECT_NEAR(gpwm_population_mu(0.5, 5), 0.375, 1e-12);
}

TEST(Gpwm, WeightsAreExact) {
  // constant sample: mu = c * int_0^1 v(-ln v)^b dv = c b!/2^{b+1}
  EXPECT_NEAR(gpwm_moment(Vector::Constant(37, 2.0), 5), 2.0 * 120.0 / 64.0, 1e-13);
  // two-point sample against direct quadrature of the empirical quantile function
  Vector x(2);
  x << 3.0, 1.0;
  boost::math::quadrature::tanh_sinh<double> q;
  auto w = [](double v) { return v * std::pow(-std::log(v), 4); };
  const double ref = 1.0 * q.integrate(w, 0.0, 0.5) + 3.0 * q.integrate(w, 0.5, 1.0);
  EXPECT_NEAR(gpwm_moment(x, 4), ref, 1e-12);
}

TEST(Gpwm, ScaleAndPermutationInvariance) {
  RngStream rng(1, 1);
  Vector x = frechet_sample(0.6, 500, rng);
  const double a = gpwm_alpha(x);
  EXPECT_NEAR(gpwm_alpha(x * 17.0), a, 1e-12);
  std::reverse(x.data(), x.data() + x.size());
  EXPECT_NEAR(gpwm_alpha(x), a, 1e-13);
}

TEST(Gpwm, CalibrationAtLargeN) {
  int inside = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RngStream rng(77, trial);
    const double a = gpwm_alpha(frechet_sample(0.7, 10000, rng), 5);
    inside += std::abs(a - 0.7) < 0.05 ? 1 : 0;
  }
  EXPECT_GE(inside, 95);
}

TEST(Gpwm, DenominatorFailure) {
  // the weights make denom >= 0 for any sample, with equality only for a constant one
  const Vector x = Vector::Constant(25, 3.7);
  EXPECT_THROW(gpwm_alpha(x, 5), EstimationFailure);
  try {
    gpwm_alpha(x, 2);
    FAIL();
  } catch (const EstimationFailure& e) {
    EXPECT_EQ(e.stage(), EstimationFailure::Stage::Alpha);
  }
}

TEST(Ml, QuantileGridRecoversAlpha) {
  const int n = 10000;
  Vector x(n);
  const specfun::FrechetLaw law(0.5);
  for (int i = 0; i < n; ++i) x[i] = law.quantile((i + 0.5) / n);
  for (MlScale s : {MlScale::Unit, MlScale::Profile}) {
    const MlResult r = ml_fit(x, s);
    EXPECT_NEAR(r.alpha, 0.5, 0.01);
    EXPECT_LT(std::abs(r.score), 1e-10);
    EXPECT_GT(r.information, 0.0);
    EXPECT_NEAR(ml_score(x, r.alpha, s), r.score, 1e-12);
  }
}

TEST(Ml, ProfileMatchesBruteForceLikelihood) {
  RngStream rng(5, 5);
  const Vector x = frechet_sample(0.8, 400, rng, 3.0);
  const MlResult r = ml_fit(x, MlScale::Profile);
  auto loglik = [&](double a, double s) {
    double l = 0.0;
    for (double v : x) l += std::log(a / s) - (a + 1) * std::log(v / s) - std::pow(v / s, -a);
    return l;
  };
  double best = -1e300, ba = 0.0, bs = 0.0;
  for (double a = 0.5; a <= 1.2; a += 0.002)
    for (double s = 1.5; s <= 6.0; s += 0.01)
      if (const double l = loglik(a, s); l > best) best = l, ba = a, bs = s;
  EXPECT_NEAR(r.alpha, ba, 0.003);
  EXPECT_NEAR(r.scale, bs, 0.02);
  EXPECT_GE(loglik(r.alpha, r.scale), best - 1e-9);
}

TEST(Ml, UnitScaleAbsorbsScaleContinuously) {
  RngStream rng(6, 6);
  const Vector x = frechet_sample(0.7, 2000, rng);
  double prev = ml_alpha(x, MlScale::Unit);
  for (double c : {1.01, 1.02, 1.03}) {
    const double a = ml_alpha(x * c, MlScale::Unit);
    EXPECT_LT(std::abs(a - prev), 0.02);
    prev = a;
  }
  // profile version is exactly scale free
  EXPECT_NEAR(ml_alpha(x * 9.0), ml_alpha(x), 1e-9);
}

TEST(Ml, DegenerateInputFails) {
  EXPECT_THROW(ml_alpha(Vector::Constant(10, 2.0)), EstimationFailure);
  Vector bad = Vector::Ones(3);
  bad[0] = -1.0;
  EXPECT_THROW(ml_alpha(bad), std::invalid_argument);
}

TEST(Angles, ExponentialLawUnderExactCopula) {
  RngStream rng(8, 8);
  const Matrix u = logistic_uniforms(0.5, 100000, rng);
  const PickandsModel a = PickandsModel::logistic(0.5);
  for (double t : {0.2, 0.5, 0.9}) {
    const SimplexPoint p = SimplexPoint::on_edge(t);
    std::vector<double> th, lth;
    for (int i = 0; i < u.rows(); ++i) {
      th.push_back(angle_from_uniforms(u, i, p));
      lth.push_back(std::log(th.back()));
    }
    const auto m = stat_util::mean_se(th);
    EXPECT_NEAR(m.mean, 1.0 / a(p), 3.0 * m.se);
    const auto l = stat_util::mean_se(lth);
    EXPECT_NEAR(-(l.mean + specfun::kEulerGamma), std::log(a(p)), 3.0 * l.se);
  }
}

TEST(Angles, VertexUsesSingleCoordinate) {
  Matrix eta(3, 2);
  eta << 1, 3, 2, 2, 3, 1;
  const EmpiricalMargins m(eta);
  EXPECT_NEAR(pickands_hat_theta(m, 0, SimplexPoint::on_edge(0.0)), -std::log(0.75 / 3.0), 1e-15);
  EXPECT_NEAR(pickands_hat_theta(m, 0, SimplexPoint::on_edge(1.0)), -std::log(0.75), 1e-15);
}

TEST(PickandsEstimators, CompleteDependence) {
  const int n = 5000;
  Matrix eta(n, 2);
  RngStream rng(2, 2);
  for (int i = 0; i < n; ++i) eta(i, 0) = eta(i, 1) = rng.exponential();
  const EmpiricalMargins m(eta);
  const SimplexPoint half = SimplexPoint::on_edge(0.5);
  EXPECT_NEAR(pickands_P(m, half), 0.5, 0.01);
  EXPECT_NEAR(pickands_CFG(m, half), 0.5, 0.01);
  EXPECT_NEAR(pickands_MD(m, half), 0.5, 0.01);
}

TEST(PickandsEstimators, Independence) {
  const int n = 10000;
  RngStream rng(3, 3);
  Matrix eta(n, 2);
  for (int i = 0; i < n; ++i) eta(i, 0) = rng.normal(), eta(i, 1) = rng.normal();
  const EmpiricalMargins m(eta);
  const SimplexPoint half = SimplexPoint::on_edge(0.5);
  EXPECT_NEAR(pickands_P(m, half), 1.0, 0.03);
  EXPECT_NEAR(pickands_CFG(m, half), 1.0, 0.03);
  EXPECT_NEAR(pickands_MD(m, half), 1.0, 0.03);
}

TEST(Madogram, PopulationIdentities) {
  const SimplexPoint half = SimplexPoint::on_edge(0.5);
  EXPECT_NEAR(madogram_c(half), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(madogram_c(half, MdNormalizer::Sum), 2.0 / 3.0, 1e-15);
  RngStream rng(4, 4);
  const int n = 100000;
  Matrix dep(n, 2), ind(n, 2);
  for (int i = 0; i < n; ++i) {
    dep(i, 0) = dep(i, 1) = rng.uniform();
    ind(i, 0) = rng.uniform();
    ind(i, 1) = rng.uniform();
  }
  EXPECT_EQ(madogram_nu(dep, half), 0.0);
  EXPECT_NEAR(pickands_from_uniforms(dep, half, PickandsMethod::MD), 0.5, 1e-12);
  // E max(U^2, V^2) - E U^2 = 1/2 - 1/3
  EXPECT_NEAR(madogram_nu(ind, half), 1.0 / 6.0, 0.003);
  EXPECT_NEAR(pickands_from_uniforms(ind, half, PickandsMethod::MD), 1.0, 0.02);
}

TEST(Madogram, ZeroWeightColumnDropsOut) {
  Matrix u(2, 2);
  u << 0.2, 0.9, 0.6, 0.1;
  // t = (1, 0): mean over rows of u_i1 - u_i1 / 2
  EXPECT_NEAR(madogram_nu(u, SimplexPoint::on_edge(0.0)), 0.5 * (0.1 + 0.3), 1e-15);
}

TEST(PickandsEstimators, RankInvariance) {
  RngStream rng(12, 1);
  Matrix eta(300, 2);
  for (int i = 0; i < eta.rows(); ++i) {
    const Vector z = sample_logistic_maxstable(0.6, 2, rng);
    eta(i, 0) = z[0];
    eta(i, 1) = z[1];
  }
  Matrix tr = eta;
  tr.col(0) = eta.col(0).array().log().matrix();
  tr.col(1) = eta.col(1).array().cube().matrix() * 5.0;
  const EmpiricalMargins a(eta), b(tr);
  const Vector grid = edge_grid(21);
  for (PickandsMethod p : {PickandsMethod::P, PickandsMethod::CFG, PickandsMethod::MD}) {
    const Vector ca = pickands_curve(a, grid, p), cb = pickands_curve(b, grid, p);
    for (Eigen::Index k = 0; k < grid.size(); ++k) EXPECT_EQ(ca[k], cb[k]);
  }
}

TEST(EndpointCorrection, VerticesBecomeOne) {
  const Vector grid = edge_grid(5);
  Vector raw(5);
  raw << 1.1, 0.9, 0.8, 0.95, 1.05;
  for (PickandsMethod p : {PickandsMethod::P, PickandsMethod::CFG, PickandsMethod::MD}) {
    const Vector c = endpoint_correct(raw, grid, p);
    EXPECT_EQ(c[0], 1.0);
    EXPECT_EQ(c[4], 1.0);
  }
  const Vector p = endpoint_correct(raw, grid, PickandsMethod::P);
  EXPECT_NEAR(1.0 / p[2], 1.0 / 0.8 - 0.5 * (1.0 / 1.1 - 1.0) - 0.5 * (1.0 / 1.05 - 1.0), 1e-14);
  const Vector c = endpoint_correct(raw, grid, PickandsMethod::CFG);
  EXPECT_NEAR(std::log(c[1]), std::log(0.9) - 0.75 * std::log(1.1) - 0.25 * std::log(1.05), 1e-14);
  Vector exact(5);
  exact << 1.0, 0.9, 0.8, 0.95, 1.0;
  for (PickandsMethod m : {PickandsMethod::P, PickandsMethod::CFG, PickandsMethod::MD}) {
    const Vector same = endpoint_correct(exact, grid, m);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(same[k], exact[k], 1e-15);
  }
}

TEST(EndpointCorrection, PreservesIndependenceOracle) {
  const int n = 10000;
  RngStream rng(3, 4);
  Matrix eta(n, 2);
  for (int i = 0; i < n; ++i) eta(i, 0) = rng.normal(), eta(i, 1) = rng.normal();
  const EmpiricalMargins m(eta);
  const Vector grid = edge_grid(11);
  for (PickandsMethod p : {PickandsMethod::P, PickandsMethod::CFG, PickandsMethod::MD}) {
    const Vector c = endpoint_correct(pickands_curve(m, grid, p), grid, p);
    for (Eigen::Index k = 0; k < grid.size(); ++k) EXPECT_NEAR(c[k], 1.0, 0.04);
  }
}

TEST(Composite, LargeSampleConsistency) {
  RngStream rng(100, 1);
  const PairedSample s = sample_experiment1(0.5, 0.5, 10000, rng);
  CompositeConfig cfg;
  cfg.pickands = PickandsMethod::CFG;
  cfg.alpha = AlphaMethod::ML;
  const CurveEstimate e = composite_estimate(s, cfg);
  const PickandsModel base = PickandsModel::logistic(0.5);
  double sup = 0.0;
  for (Eigen::Index k = 0; k < e.grid.size(); ++k) {
    const SimplexPoint t = SimplexPoint::on_edge(e.grid[k]);
    sup = std::max(sup, std::abs(e.a_star[k] - astar_from_base(base, 0.5, t)));
  }
  EXPECT_LT(sup, 0.05);
  EXPECT_EQ(e.pair_label(), "CFG+ML");
  EXPECT_NEAR(e.alpha_hat, 0.5, 0.03);
}

TEST(Composite, EnvelopeAndVertices) {
  RngStream rng(100, 2);
  const PairedSample s = sample_experiment1(0.2, 0.6, 60, rng);
  for (PickandsMethod p : {PickandsMethod::P, PickandsMethod::CFG, PickandsMethod::MD}) {
    CompositeConfig cfg;
    cfg.pickands = p;
    cfg.grid_m = 51;
    const CurveEstimate e = composite_estimate(s, cfg);
    for (Eigen::Index k = 0; k < e.grid.size(); ++k) {
      const double t = e.grid[k];
      EXPECT_GE(e.a_star[k], std::max(t, 1 - t) - 1e-15);
      EXPECT_LE(e.a_star[k], 1.0);
      EXPECT_GE(e.a_hat[k], std::max(t, 1 - t) - 1e-15);
    }
    EXPECT_EQ(e.a_hat[0], 1.0);
    EXPECT_EQ(e.a_hat[e.grid.size() - 1], 1.0);
  }
}

TEST(Composite, IndependenceCancels) {
  RngStream rng(100, 3);
  const PairedSample s = sample_experiment1(1.0, 0.5, 5000, rng);
  const CurveEstimate e = composite_estimate(s, CompositeConfig{});
  for (Eigen::Index k = 0; k < e.grid.size(); ++k) EXPECT_NEAR(e.a_star[k], 1.0, 0.05);
}

TEST(Composite, LightTailClampsAlpha) {
  RngStream rng(100, 4);
  PairedSample s = sample_experiment1(0.5, 0.5, 500, rng);
  s.xi = frechet_sample(3.0, 500, rng);
  CompositeConfig cfg;
  cfg.alpha = AlphaMethod::ML;
  const CurveEstimate e = composite_estimate(s, cfg);
  EXPECT_TRUE(e.alpha_clamped);
  EXPECT_GT(e.alpha_raw, 1.0);
  EXPECT_EQ(e.alpha_hat, kAlphaClamp);
  EXPECT_TRUE(e.a_star.allFinite());
}

TEST(Composite, NormalizerVariantDiffers) {
  RngStream rng(100, 5);
  const PairedSample s = sample_experiment1(0.5, 0.5, 200, rng);
  const EmpiricalMargins m(s.eta);
  const SimplexPoint half = SimplexPoint::on_edge(0.5);
  EXPECT_GT(pickands_MD(m, half, MdNormalizer::Sum), pickands_MD(m, half, MdNormalizer::Mean));
}
