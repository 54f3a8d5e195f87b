#include "rnmax/estimators.hpp"

#include "rnmax/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rnmax {

namespace {

[[noreturn]] void fail(EstimationFailure::Stage s, const std::string& what) {
  throw EstimationFailure(s, what);
}

void require_n(Eigen::Index n, const char* who) {
  if (n < 2) throw std::invalid_argument(std::string(who) + ": need n >= 2");
}

Vector sorted_copy(const Vector& x) {
  Vector s = x;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

// int_0^v s (-ln s)^b ds = b!/2^{b+1} v^2 sum_{k<=b} (-2 ln v)^k / k!
double gpwm_weight_cdf(double v, int b) {
  if (v <= 0.0) return 0.0;
  const double l = -2.0 * std::log(v);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= b; ++k) {
    term *= l / k;
    sum += term;
  }
  return std::exp(specfun::ln_gamma(b + 1.0) - (b + 1) * std::log(2.0)) * v * v * sum;
}

// Negative logs of a matrix of uniforms.
Matrix neg_log(const Matrix& u) { return -u.array().log().matrix(); }

double angle_from_neglog(const Matrix& L, int i, const SimplexPoint& t) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < L.cols(); ++j) {
    if (t[j] > 0.0) best = std::min(best, L(i, j) / t[j]);
  }
  return best;
}

double p_from_neglog(const Matrix& L, const SimplexPoint& t) {
  double sum = 0.0;
  for (int i = 0; i < L.rows(); ++i) sum += angle_from_neglog(L, i, t);
  return static_cast<double>(L.rows()) / sum;
}

double cfg_from_neglog(const Matrix& L, const SimplexPoint& t) {
  double sum = 0.0;
  for (int i = 0; i < L.rows(); ++i) sum += std::log(angle_from_neglog(L, i, t));
  return std::exp(-sum / static_cast<double>(L.rows()) - specfun::kEulerGamma);
}

double nu_from_neglog(const Matrix& L, const SimplexPoint& t) {
  const int d = static_cast<int>(L.cols());
  double total = 0.0;
  for (int i = 0; i < L.rows(); ++i) {
    double mx = 0.0, sum = 0.0;
    for (int j = 0; j < d; ++j) {
      const double p = t[j] > 0.0 ? std::exp(-L(i, j) / t[j]) : 0.0;
      mx = std::max(mx, p);
      sum += p;
    }
    total += mx - sum / d;
  }
  return total / static_cast<double>(L.rows());
}

double md_from_h(double h) {
  if (!(h < 1.0)) return std::numeric_limits<double>::infinity();
  return h / (1.0 - h);
}

double md_from_neglog(const Matrix& L, const SimplexPoint& t, MdNormalizer md) {
  return md_from_h(nu_from_neglog(L, t) + madogram_c(t, md));
}

double dispatch(const Matrix& L_shrunk, const Matrix& L_raw, const SimplexPoint& t,
                PickandsMethod method, MdNormalizer md) {
  switch (method) {
    case PickandsMethod::P: return p_from_neglog(L_shrunk, t);
    case PickandsMethod::CFG: return cfg_from_neglog(L_shrunk, t);
    case PickandsMethod::MD: return md_from_neglog(L_raw, t, md);
  }
  return 0.0;
}

Matrix shrunk_neglog(const EmpiricalMargins& m) {
  const double f = static_cast<double>(m.n()) / (m.n() + 1.0);
  return neg_log(m.cdf_at_obs() * f);
}

}  // namespace

const char* method_name(AlphaMethod m) { return m == AlphaMethod::GPWM ? "GPWM" : "ML"; }

const char* method_name(PickandsMethod m) {
  switch (m) {
    case PickandsMethod::P: return "P";
    case PickandsMethod::CFG: return "CFG";
    case PickandsMethod::MD: return "MD";
  }
  return "?";
}

AlphaMethod parse_alpha_method(const std::string& s) {
  if (s == "GPWM") return AlphaMethod::GPWM;
  if (s == "ML") return AlphaMethod::ML;
  throw std::invalid_argument("unknown alpha estimator '" + s + "' (GPWM, ML)");
}

PickandsMethod parse_pickands_method(const std::string& s) {
  if (s == "P") return PickandsMethod::P;
  if (s == "CFG") return PickandsMethod::CFG;
  if (s == "MD") return PickandsMethod::MD;
  throw std::invalid_argument("unknown Pickands estimator '" + s + "' (P, CFG, MD)");
}

const char* EstimationFailure::stage_name() const {
  switch (stage_) {
    case Stage::Alpha: return "alpha";
    case Stage::Pickands: return "pickands";
    case Stage::Composite: return "composite";
  }
  return "?";
}

// --- margins ----------------------------------------------------------------

EmpiricalMargins::EmpiricalMargins(const Matrix& eta, const Vector& xi) {
  require_n(eta.rows(), "EmpiricalMargins");
  if (xi.size() != 0 && xi.size() != eta.rows())
    throw std::invalid_argument("EmpiricalMargins: eta and xi lengths differ");
  const Eigen::Index n = eta.rows(), d = eta.cols();
  cdf_.resize(n, d);
  sorted_.reserve(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector col = eta.col(j);
    sorted_.push_back(sorted_copy(col));
    const Vector& s = sorted_.back();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto rank = std::upper_bound(s.data(), s.data() + n, eta(i, j)) - s.data();
      cdf_(i, j) = static_cast<double>(rank) / static_cast<double>(n);
    }
  }
  if (xi.size() != 0) xi_sorted_ = sorted_copy(xi);
}

double EmpiricalMargins::G(int j, double x) const {
  const Vector& s = sorted_.at(j);
  const auto rank = std::upper_bound(s.data(), s.data() + s.size(), x) - s.data();
  return static_cast<double>(rank) / static_cast<double>(s.size());
}

double EmpiricalMargins::H(double x) const {
  if (xi_sorted_.size() == 0) throw std::logic_error("EmpiricalMargins: no xi column");
  const auto rank =
      std::upper_bound(xi_sorted_.data(), xi_sorted_.data() + xi_sorted_.size(), x) -
      xi_sorted_.data();
  return static_cast<double>(rank) / static_cast<double>(xi_sorted_.size());
}

// --- tail index ----------------------------------------------------------------

double gpwm_moment(const Vector& xi, int b) {
  require_n(xi.size(), "gpwm_moment");
  if (b < 0) throw std::invalid_argument("gpwm_moment: b must be >= 0");
  const Vector s = sorted_copy(xi);
  const double n = static_cast<double>(s.size());
  double mu = 0.0, prev = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double cur = gpwm_weight_cdf((i + 1) / n, b);
    mu += s[i] * (cur - prev);
    prev = cur;
  }
  return mu;
}

double gpwm_alpha(const Vector& xi, int k) {
  if (k < 2) throw std::invalid_argument("gpwm_alpha: k must be >= 2");
  const double hi = gpwm_moment(xi, k);
  const double lo = gpwm_moment(xi, k - 1);
  const double denom = k - 2.0 * hi / lo;
  // a constant sample gives denom = 0 up to rounding
  if (!(denom > 1e-12 * k) || !std::isfinite(denom))
    fail(EstimationFailure::Stage::Alpha, "gpwm_alpha: non-positive denominator " + std::to_string(denom));
  return 1.0 / denom;
}

namespace {

struct ScoreEval {
  double score;
  double deriv;
  double log_s0;  // ln sum x^-alpha (profile)
};

ScoreEval score_eval(const Vector& logx, double mean_log, double alpha, MlScale scale) {
  const Eigen::Index n = logx.size();
  if (scale == MlScale::Profile) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) top = std::max(top, -alpha * logx[i]);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = std::exp(-alpha * logx[i] - top);
      s0 += w;
      s1 += w * logx[i];
      s2 += w * logx[i] * logx[i];
    }
    const double m1 = s1 / s0;
    const double var = std::max(0.0, s2 / s0 - m1 * m1);
    return {1.0 / alpha + m1 - mean_log, -1.0 / (alpha * alpha) - var, top + std::log(s0)};
  }
  double a = 0.0, b = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (logx[i] == 0.0) continue;
    const double p = std::exp(-alpha * logx[i]);
    a += logx[i] * p;
    b += logx[i] * logx[i] * p;
  }
  return {1.0 / alpha + a / n - mean_log, -1.0 / (alpha * alpha) - b / n, 0.0};
}

}  // namespace

double ml_score(const Vector& xi, double alpha, MlScale scale) {
  const Vector logx = xi.array().log().matrix();
  return score_eval(logx, logx.mean(), alpha, scale).score;
}

MlResult ml_fit(const Vector& xi, MlScale scale, int k_init) {
  require_n(xi.size(), "ml_alpha");
  if ((xi.array() <= 0.0).any() || !xi.allFinite())
    throw std::invalid_argument("ml_alpha: xi must be positive and finite");
  if (xi.maxCoeff() == xi.minCoeff())
    fail(EstimationFailure::Stage::Alpha, "ml_alpha: all observations equal");
  const Vector logx = xi.array().log().matrix();
  const double mean_log = logx.mean();
  auto eval = [&](double a) { return score_eval(logx, mean_log, a, scale); };

  double lo = 1e-3, hi = 50.0;
  const double f_lo = eval(lo).score, f_hi = eval(hi).score;
  if (!(f_lo > 0.0 && f_hi < 0.0))
    fail(EstimationFailure::Stage::Alpha, "ml_alpha: score has no sign change on [1e-3, 50]");

  double x = 0.0;
  try {
    x = gpwm_alpha(xi, k_init);
  } catch (const EstimationFailure&) {
    x = 0.0;
  }
  if (!(x > lo && x < hi)) {
    x = mean_log > 0.0 ? 1.0 / mean_log : 0.0;
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  }

  ScoreEval e = eval(x);
  int it = 0;
  for (; it < 200; ++it) {
    if (e.score == 0.0) break;
    if (e.score > 0.0) lo = x; else hi = x;
    if (std::abs(e.score) < 1e-13 || hi - lo <= 4e-16 * x) break;
    double next = x - e.score / e.deriv;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    x = next;
    e = eval(x);
  }
  MlResult r;
  r.alpha = x;
  r.score = e.score;
  r.information = -e.deriv;
  r.iterations = it;
  r.scale = scale == MlScale::Profile
                ? std::exp(-(e.log_s0 - std::log(static_cast<double>(xi.size()))) / x)
                : 1.0;
  return r;
}

double ml_alpha(const Vector& xi, MlScale scale) { return ml_fit(xi, scale).alpha; }

double estimate_alpha(const Vector& xi, AlphaMethod method, int k, MlScale scale) {
  return method == AlphaMethod::GPWM ? gpwm_alpha(xi, k) : ml_fit(xi, scale, k).alpha;
}

// --- Pickands -------------------------------------------------------------------

double angle_from_uniforms(const Matrix& u, int i, const SimplexPoint& t) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < u.cols(); ++j) {
    if (t[j] > 0.0) best = std::min(best, -std::log(u(i, j)) / t[j]);
  }
  return best;
}

double madogram_c(const SimplexPoint& t, MdNormalizer md) {
  double c = 0.0;
  for (int j = 0; j < t.dim(); ++j) c += t[j] / (1.0 + t[j]);
  return md == MdNormalizer::Mean ? c / t.dim() : c;
}

double madogram_nu(const Matrix& u, const SimplexPoint& t) {
  if (u.cols() != t.dim()) throw std::invalid_argument("madogram_nu: dimension mismatch");
  return nu_from_neglog(neg_log(u), t);
}

double pickands_from_uniforms(const Matrix& u, const SimplexPoint& t, PickandsMethod method,
                              MdNormalizer md) {
  require_n(u.rows(), "pickands");
  if (u.cols() != t.dim()) throw std::invalid_argument("pickands: dimension mismatch");
  const Matrix L = neg_log(u);
  return dispatch(L, L, t, method, md);
}

double pickands_hat_theta(const EmpiricalMargins& margins, int i, const SimplexPoint& t) {
  const double f = static_cast<double>(margins.n()) / (margins.n() + 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < margins.dim(); ++j) {
    if (t[j] > 0.0) best = std::min(best, -std::log(f * margins.cdf_at_obs()(i, j)) / t[j]);
  }
  return best;
}

double pickands_P(const EmpiricalMargins& margins, const SimplexPoint& t) {
  return pickands_estimate(margins, t, PickandsMethod::P);
}
double pickands_CFG(const EmpiricalMargins& margins, const SimplexPoint& t) {
  return pickands_estimate(margins, t, PickandsMethod::CFG);
}
double pickands_MD(const EmpiricalMargins& margins, const SimplexPoint& t, MdNormalizer md) {
  return pickands_estimate(margins, t, PickandsMethod::MD, md);
}

double pickands_estimate(const EmpiricalMargins& margins, const SimplexPoint& t,
                         PickandsMethod method, MdNormalizer md) {
  if (margins.dim() != t.dim()) throw std::invalid_argument("pickands: dimension mismatch");
  if (method == PickandsMethod::MD)
    return md_from_neglog(neg_log(margins.cdf_at_obs()), t, md);
  const Matrix L = shrunk_neglog(margins);
  return dispatch(L, L, t, method, md);
}

Vector pickands_curve(const EmpiricalMargins& margins, const Vector& grid,
                      PickandsMethod method, MdNormalizer md) {
  if (margins.dim() != 2) throw std::invalid_argument("pickands_curve: d = 2 only");
  const Matrix L = method == PickandsMethod::MD ? neg_log(margins.cdf_at_obs())
                                                : shrunk_neglog(margins);
  Vector out(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    out[k] = dispatch(L, L, SimplexPoint::on_edge(grid[k]), method, md);
  return out;
}

Vector endpoint_correct(const Vector& curve, const Vector& grid, PickandsMethod method) {
  if (curve.size() != grid.size() || curve.size() < 2)
    throw std::invalid_argument("endpoint_correct: curve and grid lengths differ");
  const Eigen::Index m = curve.size();
  Vector out(m);
  switch (method) {
    case PickandsMethod::P: {
      const double e0 = 1.0 / curve[0] - 1.0, e1 = 1.0 / curve[m - 1] - 1.0;
      for (Eigen::Index k = 0; k < m; ++k)
        out[k] = 1.0 / (1.0 / curve[k] - (1.0 - grid[k]) * e0 - grid[k] * e1);
      break;
    }
    case PickandsMethod::CFG: {
      const double e0 = std::log(curve[0]), e1 = std::log(curve[m - 1]);
      for (Eigen::Index k = 0; k < m; ++k)
        out[k] = std::exp(std::log(curve[k]) - (1.0 - grid[k]) * e0 - grid[k] * e1);
      break;
    }
    case PickandsMethod::MD: {
      // linear in h = A / (1 + A) = nu + c, where the vertex target is h = 1/2
      auto h = [](double a) { return std::isinf(a) ? 1.0 : a / (1.0 + a); };
      const double e0 = h(curve[0]) - 0.5, e1 = h(curve[m - 1]) - 0.5;
      for (Eigen::Index k = 0; k < m; ++k)
        out[k] = md_from_h(h(curve[k]) - (1.0 - grid[k]) * e0 - grid[k] * e1);
      break;
    }
  }
  out[0] = 1.0;
  out[m - 1] = 1.0;
  return out;
}

// --- composite --------------------------------------------------------------------

std::string pair_label(PickandsMethod p, AlphaMethod a) {
  return std::string(method_name(p)) + "+" + method_name(a);
}

std::string CurveEstimate::pair_label() const { return rnmax::pair_label(pickands, alpha_method); }

CurveEstimate composite_from_parts(double alpha_raw, const Vector& grid, const Vector& a_alpha,
                                   PickandsMethod pickands, AlphaMethod alpha_method,
                                   bool corrected) {
  if (grid.size() != a_alpha.size() || grid.size() < 2)
    throw std::invalid_argument("composite: grid and curve lengths differ");
  if (!(alpha_raw > 0.0) || !std::isfinite(alpha_raw))
    fail(EstimationFailure::Stage::Alpha, "composite: alpha estimate not positive");
  CurveEstimate out;
  out.grid = grid;
  out.a_alpha = a_alpha;
  out.alpha_raw = alpha_raw;
  out.alpha_clamped = alpha_raw >= 1.0;
  out.alpha_hat = out.alpha_clamped ? kAlphaClamp : alpha_raw;
  out.pickands = pickands;
  out.alpha_method = alpha_method;
  out.corrected = corrected;

  const Eigen::Index m = grid.size();
  out.a_star.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    if (!(a_alpha[k] > 0.0))
      fail(EstimationFailure::Stage::Pickands,
           "composite: non-positive A_alpha estimate at t=" + std::to_string(grid[k]));
    const ClampedValue v =
        transform_Aalpha_to_Astar(a_alpha[k], out.alpha_hat, SimplexPoint::on_edge(grid[k]));
    out.a_star[k] = v.value;
    if (v.clamped) ++out.envelope_clamps;
  }
  out.a_hat.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const SimplexPoint s = alpha_flatten(SimplexPoint::on_edge(grid[k]), out.alpha_hat);
    // linear interpolation between A* nodes can dip under max(t) near the
    // vertices, where s(t) moves fast; the bound holds for every true A
    const double t = grid[k];
    out.a_hat[k] = std::clamp(interpolate_grid(out.a_star, s.edge()), std::max(t, 1.0 - t), 1.0);
  }
  return out;
}

CurveEstimate composite_estimate(const PairedSample& sample, const CompositeConfig& config) {
  sample.validate();
  if (sample.dim() != 2) throw std::invalid_argument("composite_estimate: d = 2 only");
  if (config.grid_m < 3) throw std::invalid_argument("composite_estimate: grid_m must be >= 3");
  const double alpha = estimate_alpha(sample.xi, config.alpha, config.k, config.ml_scale);
  const Vector grid = edge_grid(config.grid_m);
  const EmpiricalMargins margins(sample.eta);
  Vector curve = pickands_curve(margins, grid, config.pickands, config.md_normalizer);
  if (config.correct) curve = endpoint_correct(curve, grid, config.pickands);
  return composite_from_parts(alpha, grid, curve, config.pickands, config.alpha, config.correct);
}

}  // namespace rnmax
