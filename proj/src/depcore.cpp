#include "rnmax/depcore.hpp"

#include "rnmax/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rnmax {

namespace {

constexpr double kSimplexTol = 1e-12;
constexpr double kClampTol = 1e-12;

[[noreturn]] void domain(const std::string& what) { throw std::domain_error(what); }

void check_alpha_unit(double alpha, const char* fn) {
  if (!(alpha > 0.0 && alpha <= 1.0)) domain(std::string(fn) + ": alpha must lie in (0, 1]");
}

double extremal_t_term(double w, double rho, double nu) {
  if (w <= 0.0) return 0.0;
  if (w >= 1.0) return 1.0;
  const double b = std::sqrt((nu + 1.0) / (1.0 - rho * rho));
  const double z = (std::pow(w / (1.0 - w), 1.0 / nu) - rho) * b;
  return w * specfun::student_t_cdf(z, nu + 1.0);
}

// gamma(s, u) extended to s = 0 by the convention Gamma(0) = 1.
double lower_gamma_convention(double s, double u) {
  if (s > 0.0) return specfun::lower_incomplete_gamma(s, u);
  if (u == 0.0) return 0.0;  // only reached with a zero prefactor
  return 1.0 - specfun::expint_e1(u);
}

double gamma_convention(double s) { return s > 0.0 ? specfun::gamma(s) : 1.0; }

}  // namespace

// --- SimplexPoint ------------------------------------------------------------

SimplexPoint::SimplexPoint(Vector t) : t_(std::move(t)) {
  if (t_.size() < 2) domain("SimplexPoint: dimension must be at least 2");
  for (Eigen::Index j = 0; j < t_.size(); ++j) {
    if (!(t_[j] >= 0.0) || !std::isfinite(t_[j]))
      domain("SimplexPoint: components must be nonnegative and finite");
  }
  if (std::abs(t_.sum() - 1.0) > kSimplexTol) domain("SimplexPoint: components must sum to 1");
}

SimplexPoint SimplexPoint::on_edge(double t) {
  if (!(t >= 0.0 && t <= 1.0)) domain("SimplexPoint::on_edge: t must lie in [0, 1]");
  Vector v(2);
  v << 1.0 - t, t;
  return SimplexPoint(std::move(v));
}

SimplexPoint SimplexPoint::barycenter(int d) {
  if (d < 2) domain("SimplexPoint::barycenter: d must be at least 2");
  return SimplexPoint(Vector::Constant(d, 1.0 / d));
}

SimplexPoint SimplexPoint::vertex(int d, int j) {
  if (d < 2 || j < 0 || j >= d) domain("SimplexPoint::vertex: bad index");
  Vector v = Vector::Zero(d);
  v[j] = 1.0;
  return SimplexPoint(std::move(v));
}

double SimplexPoint::edge() const {
  if (dim() != 2) domain("SimplexPoint::edge: only defined for d = 2");
  return t_[1];
}

double logistic_norm(const SimplexPoint& t, double alpha) {
  check_alpha_unit(alpha, "logistic_norm");
  return logistic_norm(t.coords(), alpha);
}

SimplexPoint alpha_sharpen(const SimplexPoint& t, double alpha) {
  check_alpha_unit(alpha, "alpha_sharpen");
  const Vector& v = t.coords();
  const double top = v.maxCoeff();
  Vector r = (v / top).array().pow(1.0 / alpha).matrix();
  r /= r.sum();
  return SimplexPoint(std::move(r));
}

SimplexPoint alpha_flatten(const SimplexPoint& t, double alpha) {
  check_alpha_unit(alpha, "alpha_flatten");
  Vector r = t.coords().array().pow(alpha).matrix();
  r /= r.sum();
  return SimplexPoint(std::move(r));
}

Vector edge_grid(int m) {
  if (m < 2) domain("edge_grid: need at least 2 nodes");
  Vector g(m);
  for (int i = 0; i < m; ++i) g[i] = static_cast<double>(i) / (m - 1);
  g[m - 1] = 1.0;
  return g;
}

// --- PickandsModel -------------------------------------------------------------

PickandsModel PickandsModel::logistic(double psi, int dim) {
  if (!(psi > 0.0 && psi <= 1.0)) domain("logistic: psi must lie in (0, 1]");
  if (dim < 2) domain("logistic: dimension must be at least 2");
  return PickandsModel(Logistic{psi}, dim);
}

PickandsModel PickandsModel::extremal_t(double rho, double nu) {
  if (!(rho > -1.0 && rho < 1.0)) domain("extremal_t: rho must lie in (-1, 1)");
  if (!(nu > 0.0)) domain("extremal_t: nu must be positive");
  return PickandsModel(ExtremalT{rho, nu}, 2);
}

PickandsModel PickandsModel::independence(int dim) {
  if (dim < 2) domain("independence: dimension must be at least 2");
  return PickandsModel(Independence{}, dim);
}

PickandsModel PickandsModel::alpha_transform(PickandsModel base, double alpha) {
  check_alpha_unit(alpha, "alpha_transform");
  const int d = base.dim();
  return PickandsModel(
      AlphaTransform{std::make_shared<const PickandsModel>(std::move(base)), alpha}, d);
}

PickandsModel PickandsModel::grid_curve(Vector values) {
  if (values.size() < 2) domain("grid_curve: need at least 2 nodes");
  return PickandsModel(GridCurve{std::move(values)}, 2);
}

double PickandsModel::operator()(const SimplexPoint& t) const {
  if (t.dim() != dim_) domain("pickands_eval: dimension mismatch");
  struct Visitor {
    const SimplexPoint& t;
    double operator()(const Logistic& m) const { return logistic_norm(t.coords(), m.psi); }
    double operator()(const Independence&) const { return 1.0; }
    double operator()(const ExtremalT& m) const {
      const double w = t.edge();
      return extremal_t_term(w, m.rho, m.nu) + extremal_t_term(1.0 - w, m.rho, m.nu);
    }
    double operator()(const AlphaTransform& m) const {
      const double norm = logistic_norm(t.coords(), m.alpha);
      return norm * std::pow((*m.base)(alpha_sharpen(t, m.alpha)), m.alpha);
    }
    double operator()(const GridCurve& m) const { return interpolate_grid(m.values, t.edge()); }
  };
  return std::visit(Visitor{t}, family_);
}

std::string PickandsModel::describe() const {
  std::ostringstream os;
  struct Visitor {
    std::ostringstream& os;
    void operator()(const Logistic& m) const { os << "logistic(psi=" << m.psi << ")"; }
    void operator()(const Independence&) const { os << "independence"; }
    void operator()(const ExtremalT& m) const {
      os << "extremal_t(rho=" << m.rho << ",nu=" << m.nu << ")";
    }
    void operator()(const AlphaTransform& m) const {
      os << "alpha_transform(" << m.base->describe() << ",alpha=" << m.alpha << ")";
    }
    void operator()(const GridCurve& m) const { os << "grid_curve(m=" << m.values.size() << ")"; }
  };
  std::visit(Visitor{os}, family_);
  return os.str();
}

double pickands_eval(const PickandsModel& model, const SimplexPoint& t) { return model(t); }

Vector evaluate_on_grid(const PickandsModel& model, const Vector& grid) {
  Vector out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = model(SimplexPoint::on_edge(grid[i]));
  return out;
}

double interpolate_grid(const Vector& values, double t) {
  const Eigen::Index m = values.size();
  if (!(t >= 0.0 && t <= 1.0)) domain("interpolate_grid: t must lie in [0, 1]");
  const double pos = t * static_cast<double>(m - 1);
  Eigen::Index lo = static_cast<Eigen::Index>(std::floor(pos));
  if (lo >= m - 1) return values[m - 1];
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return (1.0 - frac) * values[lo] + frac * values[lo + 1];
}

double stable_tail_L(const PickandsModel& model, const Vector& z) {
  if (z.size() != model.dim()) domain("stable_tail_L: dimension mismatch");
  if ((z.array() < 0.0).any() || !z.allFinite()) domain("stable_tail_L: z must be nonnegative");
  const double s = z.sum();
  if (!(s > 0.0)) domain("stable_tail_L: z must not be zero");
  Vector t = z / s;
  t[t.size() - 1] = std::max(0.0, 1.0 - t.head(t.size() - 1).sum());
  return s * model(SimplexPoint(std::move(t)));
}

ClampedValue transform_Aalpha_to_Astar(double a_alpha, double alpha, const SimplexPoint& t) {
  check_alpha_unit(alpha, "transform_Aalpha_to_Astar");
  const double norm = logistic_norm(t.coords(), alpha);
  const double raw = std::pow(a_alpha / norm, 1.0 / alpha);
  const double lower = alpha_sharpen(t, alpha).coords().maxCoeff();
  if (!std::isfinite(raw)) return {1.0, true};
  if (raw > 1.0) return {1.0, raw > 1.0 + kClampTol};
  if (raw < lower) return {lower, raw < lower - kClampTol};
  return {raw, false};
}

ClampedValue transform_Aalpha_to_Astar(const PickandsModel& a_alpha, double alpha,
                                       const SimplexPoint& t) {
  return transform_Aalpha_to_Astar(a_alpha(t), alpha, t);
}

double astar_from_base(const PickandsModel& base, double alpha, const SimplexPoint& t) {
  return base(alpha_sharpen(t, alpha));
}

double extremal_coefficient(const PickandsModel& model) {
  const int d = model.dim();
  return d * model(SimplexPoint::barycenter(d));
}

double lambda_from_theta(double theta) {
  if (!(theta >= 1.0 - kClampTol && theta <= 2.0 + kClampTol))
    throw RangeError("lambda_from_theta: theta must lie in [1, 2]", theta);
  return std::clamp(2.0 - theta, 0.0, 1.0);
}

double lambda_inverse_link(double lambda_mn, double alpha) {
  if (!(lambda_mn >= 0.0 && lambda_mn <= 1.0)) domain("lambda_inverse_link: lambda must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) domain("lambda_inverse_link: alpha must lie in (0, 1)");
  const double value = 2.0 - std::pow(2.0 - lambda_mn, 1.0 / alpha);
  if (value < -kClampTol || value > 1.0 + kClampTol)
    throw RangeError("lambda_inverse_link: implied lambda(F_X) outside [0, 1]", value);
  return std::clamp(value, 0.0, 1.0);
}

double tail_prob_approx(const PickandsModel& model, double alpha, const Vector& z, long n) {
  if (!(alpha > 0.0 && alpha < 1.0)) domain("tail_prob_approx: alpha must lie in (0, 1)");
  if (n < 1) domain("tail_prob_approx: n must be positive");
  if ((z.array() < 0.0).any()) domain("tail_prob_approx: z must be nonnegative");
  if (z.sum() == 0.0) return 0.0;
  const Vector scaled = z.array().pow(1.0 / alpha).matrix() / static_cast<double>(n);
  return std::pow(stable_tail_L(model, scaled), alpha);
}

// --- Limit law Q -----------------------------------------------------------------

double GevMargin::neg_log_cdf(double x) const {
  const double u = (x - loc) / scale;
  switch (type) {
    case GevType::Frechet:
      if (!(u > 0.0)) domain("GevMargin: x below the Frechet lower endpoint");
      return std::pow(u, -shape);
    case GevType::Gumbel:
      return std::exp(-u);
    case GevType::Weibull:
      return u >= 0.0 ? 0.0 : std::pow(-u, shape);
  }
  return 0.0;
}

double GevMargin::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) domain("GevMargin::quantile: p must lie in (0, 1)");
  const double q = -std::log(p);
  switch (type) {
    case GevType::Frechet:
      return loc + scale * std::pow(q, -1.0 / shape);
    case GevType::Gumbel:
      return loc - scale * std::log(q);
    case GevType::Weibull:
      return loc - scale * std::pow(q, 1.0 / shape);
  }
  return 0.0;
}

LimitLawQ::LimitLawQ(PickandsModel base, std::vector<GevMargin> margins, TailOfN tail, double alpha)
    : base_(std::move(base)), margins_(std::move(margins)), tail_(tail), alpha_(alpha) {
  if (static_cast<int>(margins_.size()) != base_.dim())
    domain("LimitLawQ: one GEV margin per dimension is required");
  for (const auto& m : margins_) {
    if (!(m.scale > 0.0)) domain("LimitLawQ: margin scale must be positive");
    if (m.type != GevType::Gumbel && !(m.shape > 0.0))
      domain("LimitLawQ: margin shape must be positive");
  }
  if (tail_ == TailOfN::Frechet && !(alpha_ > 0.0)) domain("LimitLawQ: alpha must be positive");
}

LimitLawQ::Branch LimitLawQ::branch() const {
  if (tail_ == TailOfN::Gumbel) return Branch::GumbelN;
  if (alpha_ < 1.0) return Branch::FrechetBelowOne;
  if (alpha_ == 1.0) return Branch::FrechetAtOne;
  return Branch::FrechetAboveOne;
}

const char* branch_name(LimitLawQ::Branch b) {
  switch (b) {
    case LimitLawQ::Branch::FrechetBelowOne:
      return "frechet_below_one";
    case LimitLawQ::Branch::FrechetAtOne:
      return "frechet_at_one";
    case LimitLawQ::Branch::FrechetAboveOne:
      return "frechet_above_one";
    case LimitLawQ::Branch::GumbelN:
      return "gumbel";
  }
  return "unknown";
}

double neg_log_G(const LimitLawQ& law, const Vector& x) {
  if (x.size() != law.dim()) domain("neg_log_G: dimension mismatch");
  Vector z(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) z[j] = law.margins()[j].neg_log_cdf(x[j]);
  if (z.sum() == 0.0) return 0.0;
  return stable_tail_L(law.base(), z);
}

double neg_log_Q(const LimitLawQ& law, const Vector& x, double y) {
  const double m = neg_log_G(law, x);
  const auto branch = law.branch();
  if (branch == LimitLawQ::Branch::GumbelN) return m + std::exp(-y);
  if (!(y > 0.0)) domain("neg_log_Q: y must be positive for a Frechet-tailed N");
  const double alpha = law.alpha();
  if (branch == LimitLawQ::Branch::FrechetAboveOne) return m + std::pow(y, -alpha);
  const double s = 1.0 - alpha;
  const double sigma = m / std::pow(gamma_convention(s), 1.0 / alpha);
  const double head = std::pow(y, -alpha) * std::exp(-y * sigma);
  if (sigma == 0.0) return head;
  return head + std::pow(sigma, alpha) * lower_gamma_convention(s, y * sigma);
}

double theta_Q(const LimitLawQ& law) {
  const double theta = extremal_coefficient(law.base());
  switch (law.branch()) {
    case LimitLawQ::Branch::FrechetBelowOne: {
      const double a = law.alpha();
      const double g = specfun::gamma(1.0 - a);
      const double c = theta / std::pow(g, 1.0 / a);
      return std::exp(-c) + std::pow(theta, a) / g * specfun::lower_incomplete_gamma(1.0 - a, c);
    }
    case LimitLawQ::Branch::FrechetAtOne:
      return std::exp(-theta) + theta * (specfun::log_integral(std::exp(-theta)) + 1.0);
    case LimitLawQ::Branch::FrechetAboveOne:
    case LimitLawQ::Branch::GumbelN:
      return theta + 1.0;
  }
  return theta + 1.0;
}

MarginalPoint matched_marginal_point(const LimitLawQ& law) {
  const double p = std::exp(-1.0);
  Vector x(law.dim());
  for (int j = 0; j < law.dim(); ++j) x[j] = law.margins()[j].quantile(p);
  const double y = law.tail() == TailOfN::Gumbel ? 0.0 : 1.0;
  return {std::move(x), y};
}

}  // namespace rnmax
