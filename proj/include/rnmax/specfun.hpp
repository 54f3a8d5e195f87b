#ifndef RNMAX_SPECFUN_HPP
#define RNMAX_SPECFUN_HPP

// Scalar special functions used by the dependence core and the estimators.
// Every function is pure and thread-safe. Invalid arguments raise
// std::domain_error.

namespace rnmax::specfun {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;
inline constexpr double kPi = 3.14159265358979323846264338;

/// ln Gamma(x) for x > 0. Relative error ~1e-15 on [1e-3, 170], including the
/// neighbourhoods of the zeros at x = 1 and x = 2.
double ln_gamma(double x);

/// Gamma(x) for 0 < x < 171.6.
double gamma(double x);

/// Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s).
double gamma_p(double s, double x);

/// Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x).
double gamma_q(double s, double x);

/// Lower incomplete gamma gamma(s, x) = int_0^x t^{s-1} e^{-t} dt.
/// Uses the series for x < s + 1 and a continued fraction otherwise.
double lower_incomplete_gamma(double s, double x);

/// Upper incomplete gamma Gamma(s, x).
double upper_incomplete_gamma(double s, double x);

/// Exponential integral E1(x) = int_x^inf e^{-t}/t dt, x > 0.
double expint_e1(double x);

/// Exponential integral Ei(x) (principal value), x != 0.
double expint_ei(double x);

/// Logarithmic integral li(x) = PV int_0^x dt / ln t, for x > 0, x != 1.
/// Evaluated as Ei(ln x).
double log_integral(double x);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// CDF of the standard Student-t law with nu > 0 degrees of freedom.
double student_t_cdf(double x, double nu);

/// Frechet law Phi_alpha(x / scale) = exp(-(x/scale)^{-alpha}), x > 0.
class FrechetLaw {
 public:
  explicit FrechetLaw(double alpha, double scale = 1.0);

  double alpha() const { return alpha_; }
  double scale() const { return scale_; }

  double cdf(double x) const;
  double quantile(double v) const;
  double logpdf(double x) const;

 private:
  double alpha_;
  double scale_;
};

}  // namespace rnmax::specfun

#endif  // RNMAX_SPECFUN_HPP
