#ifndef RNMAX_ESTIMATORS_HPP
#define RNMAX_ESTIMATORS_HPP

// Tail-index estimators for the xi column (GPWM, ML), nonparametric Pickands
// estimators for the eta columns (P, CFG, MD) and the composite inverse
// estimator of A*.

#include "rnmax/depcore.hpp"
#include "rnmax/samplers.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace rnmax {

enum class AlphaMethod { GPWM, ML };
enum class PickandsMethod { P, CFG, MD };
/// MD normalizer: c(t) = d^-1 sum t_j/(1+t_j) (Mean) or the undivided sum.
enum class MdNormalizer { Mean, Sum };
/// ML on the raw xi (Unit) or with the Frechet scale profiled out.
enum class MlScale { Profile, Unit };

const char* method_name(AlphaMethod m);
const char* method_name(PickandsMethod m);
AlphaMethod parse_alpha_method(const std::string& s);
PickandsMethod parse_pickands_method(const std::string& s);

class EstimationFailure : public std::runtime_error {
 public:
  enum class Stage { Alpha, Pickands, Composite };
  EstimationFailure(Stage stage, const std::string& what)
      : std::runtime_error(what), stage_(stage) {}
  Stage stage() const { return stage_; }
  const char* stage_name() const;

 private:
  Stage stage_;
};

/// Rank-based empirical CDFs of the eta columns and of xi. Ties get the
/// largest rank, so G_{n,j}(eta_ij) = #{k : eta_kj <= eta_ij} / n.
class EmpiricalMargins {
 public:
  explicit EmpiricalMargins(const Matrix& eta, const Vector& xi = Vector());
  explicit EmpiricalMargins(const PairedSample& s) : EmpiricalMargins(s.eta, s.xi) {}

  int n() const { return static_cast<int>(cdf_.rows()); }
  int dim() const { return static_cast<int>(cdf_.cols()); }

  /// G_{n,j}(x).
  double G(int j, double x) const;
  /// H_n(x); requires xi.
  double H(double x) const;
  /// n x d matrix of G_{n,j}(eta_ij).
  const Matrix& cdf_at_obs() const { return cdf_; }
  const Vector& sorted_xi() const { return xi_sorted_; }

 private:
  std::vector<Vector> sorted_;
  Matrix cdf_;
  Vector xi_sorted_;
};

// -- tail index -------------------------------------------------------------

/// mu_{1,b} = int_0^1 H_n^{<-}(v) v (-ln v)^b dv, exact for the empirical
/// quantile function.
double gpwm_moment(const Vector& xi, int b);

/// alpha = 1 / (k - 2 mu_{1,k} / mu_{1,k-1}).
double gpwm_alpha(const Vector& xi, int k = 5);

struct MlResult {
  double alpha;
  double score;        // mean score at alpha
  double information;  // minus the score derivative at alpha
  double scale;        // fitted Frechet scale (1 for MlScale::Unit)
  int iterations;
};

/// Mean Frechet score in alpha. For Profile the scale is replaced by its
/// conditional MLE.
double ml_score(const Vector& xi, double alpha, MlScale scale = MlScale::Profile);

MlResult ml_fit(const Vector& xi, MlScale scale = MlScale::Profile, int k_init = 5);
double ml_alpha(const Vector& xi, MlScale scale = MlScale::Profile);

double estimate_alpha(const Vector& xi, AlphaMethod method, int k = 5,
                      MlScale scale = MlScale::Profile);

// -- Pickands estimators ------------------------------------------------------

/// theta_i(t) = min over t_j > 0 of -ln(u_ij) / t_j.
double angle_from_uniforms(const Matrix& u, int i, const SimplexPoint& t);

/// P / CFG / MD evaluated directly on a matrix of (pseudo-)uniforms. P and
/// CFG use u in the logarithm as is. MD uses u^{1/t_j} with u^{1/0} = 0.
double pickands_from_uniforms(const Matrix& u, const SimplexPoint& t, PickandsMethod method,
                              MdNormalizer md = MdNormalizer::Mean);

/// Madogram nu(t) = mean_i [max_j u_ij^{1/t_j} - d^{-1} sum_j u_ij^{1/t_j}].
double madogram_nu(const Matrix& u, const SimplexPoint& t);
double madogram_c(const SimplexPoint& t, MdNormalizer md = MdNormalizer::Mean);

/// theta_i(t) with u = n/(n+1) G_{n,j}(eta_ij).
double pickands_hat_theta(const EmpiricalMargins& margins, int i, const SimplexPoint& t);
double pickands_P(const EmpiricalMargins& margins, const SimplexPoint& t);
double pickands_CFG(const EmpiricalMargins& margins, const SimplexPoint& t);
double pickands_MD(const EmpiricalMargins& margins, const SimplexPoint& t,
                   MdNormalizer md = MdNormalizer::Mean);
double pickands_estimate(const EmpiricalMargins& margins, const SimplexPoint& t,
                         PickandsMethod method, MdNormalizer md = MdNormalizer::Mean);

/// Raw curve on the edge grid (d = 2).
Vector pickands_curve(const EmpiricalMargins& margins, const Vector& grid,
                      PickandsMethod method, MdNormalizer md = MdNormalizer::Mean);

/// Vertex correction of a raw curve on the edge grid; the corrected curve is
/// exactly 1 at t = 0 and t = 1.
Vector endpoint_correct(const Vector& curve, const Vector& grid, PickandsMethod method);

// -- composite ------------------------------------------------------------------

struct CompositeConfig {
  PickandsMethod pickands = PickandsMethod::CFG;
  AlphaMethod alpha = AlphaMethod::GPWM;
  int k = 5;
  int grid_m = 201;
  bool correct = true;
  MdNormalizer md_normalizer = MdNormalizer::Mean;
  MlScale ml_scale = MlScale::Profile;
};

struct CurveEstimate {
  Vector grid;
  Vector a_alpha;
  Vector a_star;
  Vector a_hat;
  double alpha_hat = 0.0;  // value used in the transform
  double alpha_raw = 0.0;  // estimator output
  PickandsMethod pickands = PickandsMethod::CFG;
  AlphaMethod alpha_method = AlphaMethod::GPWM;
  bool corrected = false;
  bool alpha_clamped = false;
  int envelope_clamps = 0;

  std::string pair_label() const;
};

inline constexpr double kAlphaClamp = 1.0 - 1e-6;

/// Combine an alpha estimate with an (already corrected or raw) A_alpha curve
/// on the edge grid.
CurveEstimate composite_from_parts(double alpha_raw, const Vector& grid, const Vector& a_alpha,
                                   PickandsMethod pickands, AlphaMethod alpha_method,
                                   bool corrected);

CurveEstimate composite_estimate(const PairedSample& sample, const CompositeConfig& config);

/// "CFG+GPWM" style label.
std::string pair_label(PickandsMethod p, AlphaMethod a);

}  // namespace rnmax

#endif  // RNMAX_ESTIMATORS_HPP
