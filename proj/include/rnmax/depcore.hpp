#ifndef RNMAX_DEPCORE_HPP
#define RNMAX_DEPCORE_HPP

// Deterministic dependence-structure mathematics: Pickands dependence
// functions, the alpha-transform A -> A_alpha and its inverse A_alpha -> A*,
// extremal and tail-dependence coefficients, and the joint limit law Q of
// (M_N, N).
//
// Simplex points for d = 2 are parametrized by the edge coordinate
// t = t_2 in [0, 1], i.e. the point (1 - t, t); t = 0 is the vertex e_1.

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rnmax {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a derived quantity falls outside its admissible range.
/// Carries the offending value.
class RangeError : public std::range_error {
 public:
  RangeError(const std::string& what, double value)
      : std::range_error(what), value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

/// A point of the unit simplex S_d (d >= 2).
class SimplexPoint {
 public:
  explicit SimplexPoint(Vector t);

  static SimplexPoint on_edge(double t);
  static SimplexPoint barycenter(int d);
  static SimplexPoint vertex(int d, int j);

  const Vector& coords() const { return t_; }
  int dim() const { return static_cast<int>(t_.size()); }
  double operator[](int j) const { return t_[j]; }
  /// Edge coordinate t_2 (d = 2 only).
  double edge() const;

 private:
  Vector t_;
};

/// (sum_j t_j^{1/alpha})^alpha for 0 < alpha <= 1, evaluated with max-scaling
/// so that small alpha does not underflow.
template <typename Derived>
typename Derived::Scalar logistic_norm(const Eigen::MatrixBase<Derived>& t,
                                       typename Derived::Scalar alpha) {
  using Scalar = typename Derived::Scalar;
  using std::pow;
  const Scalar top = t.maxCoeff();
  if (top <= Scalar(0)) return Scalar(0);
  const Scalar p = Scalar(1) / alpha;
  Scalar sum(0);
  for (Eigen::Index j = 0; j < t.size(); ++j) sum += pow(t(j) / top, p);
  return top * pow(sum, alpha);
}

double logistic_norm(const SimplexPoint& t, double alpha);

/// w(t) = (t / ||t||_{1/alpha})^{1/alpha}: the argument of A inside A_alpha.
SimplexPoint alpha_sharpen(const SimplexPoint& t, double alpha);

/// s(t) = t^alpha / ||t^alpha||_1: the inverse map of alpha_sharpen.
SimplexPoint alpha_flatten(const SimplexPoint& t, double alpha);

/// Nodes t_0 = 0, ..., t_{m-1} = 1 of the uniform edge grid (m >= 2).
Vector edge_grid(int m);

/// Pickands dependence function with its family parameters.
class PickandsModel {
 public:
  struct Logistic {
    double psi;
  };
  struct ExtremalT {
    double rho;
    double nu;
  };
  struct Independence {};
  struct AlphaTransform {
    std::shared_ptr<const PickandsModel> base;
    double alpha;
  };
  /// Values on the uniform edge grid, linearly interpolated (d = 2).
  struct GridCurve {
    Vector values;
  };
  using Family = std::variant<Logistic, ExtremalT, Independence, AlphaTransform, GridCurve>;

  static PickandsModel logistic(double psi, int dim = 2);
  static PickandsModel extremal_t(double rho, double nu);
  static PickandsModel independence(int dim = 2);
  static PickandsModel alpha_transform(PickandsModel base, double alpha);
  static PickandsModel grid_curve(Vector values);

  int dim() const { return dim_; }
  const Family& family() const { return family_; }
  double operator()(const SimplexPoint& t) const;
  std::string describe() const;

 private:
  PickandsModel(Family family, int dim) : family_(std::move(family)), dim_(dim) {}

  Family family_;
  int dim_;
};

double pickands_eval(const PickandsModel& model, const SimplexPoint& t);

/// Model values on the edge grid (d = 2).
Vector evaluate_on_grid(const PickandsModel& model, const Vector& grid);

/// Linear interpolation of grid values at edge coordinate t.
double interpolate_grid(const Vector& values, double t);

/// L(z) = (sum z) A(z / sum z). Throws std::domain_error for z = 0.
double stable_tail_L(const PickandsModel& model, const Vector& z);

struct ClampedValue {
  double value;
  bool clamped;
};

/// A*(t) = (A_alpha(t) / ||t||_{1/alpha})^{1/alpha}, clamped to the envelope
/// [max_j w_j(t), 1] that every A*(t) = A(w(t)) satisfies. The flag is set
/// when the raw value left the envelope by more than 1e-12.
ClampedValue transform_Aalpha_to_Astar(double a_alpha, double alpha, const SimplexPoint& t);
ClampedValue transform_Aalpha_to_Astar(const PickandsModel& a_alpha, double alpha,
                                       const SimplexPoint& t);

/// A(t) = A*(t^alpha / ||t^alpha||_1). The curve is any callable taking a
/// SimplexPoint and returning double.
template <typename Curve>
double astar_to_A(const Curve& a_star, double alpha, const SimplexPoint& t) {
  return a_star(alpha_flatten(t, alpha));
}

/// A*(t) = A(w(t)) for a known base model.
double astar_from_base(const PickandsModel& base, double alpha, const SimplexPoint& t);

/// theta = d A(1/d, ..., 1/d).
double extremal_coefficient(const PickandsModel& model);

/// lambda = 2 - theta, theta in [1, 2].
double lambda_from_theta(double theta);

/// lambda(F_X) = 2 - (2 - lambda(F_{M_N}))^{1/alpha}. RangeError when the
/// result leaves [0, 1].
double lambda_inverse_link(double lambda_mn, double alpha);

/// L^alpha(z^{1/alpha} / n): approximate joint upper-tail probability of M_N.
double tail_prob_approx(const PickandsModel& model, double alpha, const Vector& z, long n);

// ---------------------------------------------------------------------------
// Limit law Q of (M_N, N).

enum class GevType { Frechet, Gumbel, Weibull };

struct GevMargin {
  GevType type = GevType::Frechet;
  double shape = 1.0;  // Frechet / Weibull index
  double loc = 0.0;
  double scale = 1.0;

  /// -ln G_j(x); 0 at and above a finite upper endpoint. Throws
  /// std::domain_error below a finite lower endpoint.
  double neg_log_cdf(double x) const;
  double quantile(double p) const;
};

enum class TailOfN { Frechet, Gumbel };

class LimitLawQ {
 public:
  enum class Branch { FrechetBelowOne, FrechetAtOne, FrechetAboveOne, GumbelN };

  LimitLawQ(PickandsModel base, std::vector<GevMargin> margins, TailOfN tail, double alpha);

  const PickandsModel& base() const { return base_; }
  const std::vector<GevMargin>& margins() const { return margins_; }
  TailOfN tail() const { return tail_; }
  double alpha() const { return alpha_; }
  Branch branch() const;
  int dim() const { return base_.dim(); }

 private:
  PickandsModel base_;
  std::vector<GevMargin> margins_;
  TailOfN tail_;
  double alpha_;
};

/// -ln G(x) = L(-ln G_1(x_1), ..., -ln G_d(x_d)).
double neg_log_G(const LimitLawQ& law, const Vector& x);

/// -ln Q(x, y). For alpha = 1 the convention Gamma(0) = 1 is applied through
/// gamma(0, u) := Gamma(0) - Gamma(0, u) = 1 - E1(u).
double neg_log_Q(const LimitLawQ& law, const Vector& x, double y);

/// Closed-form extremal coefficient of Q.
double theta_Q(const LimitLawQ& law);

/// Point (x, y) at which every univariate margin of Q equals e^{-1}.
struct MarginalPoint {
  Vector x;
  double y;
};
MarginalPoint matched_marginal_point(const LimitLawQ& law);

const char* branch_name(LimitLawQ::Branch b);

}  // namespace rnmax

#endif  // RNMAX_DEPCORE_HPP
