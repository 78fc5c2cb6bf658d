#pragma once

#include <vector>

#include "fracheat/interp.hpp"

namespace fracheat {

// Standardized one-sided stable density g_b with Laplace transform
//   int_0^inf exp(-lam s) g_b(s) ds = exp(-lam^b),  0 < b < 1.
// Index b = 1/2 is the closed-form Levy case used as the validation anchor.
namespace stable {

// Kanter's finite-interval integral representation; accurate for all x > 0
// but costs a quadrature per call. If dlog is non-null it receives the
// exact logarithmic derivative d log g / d log x.
double kanter_density(double b, double x, int ts_level = 7,
                      double* dlog = nullptr);

// Convergent large-x series; cancellation_ratio reports max|term| / |sum|.
double series_density(double b, double x, int max_terms = 80,
                      double* cancellation_ratio = nullptr,
                      double* dlog = nullptr);

// Leading small-x asymptotic c(b) * x^{-(2-b)/(2(1-b))} * exp(-a(b) x^{-b/(1-b)}).
double left_asymptotic(double b, double x);

// Coefficients of the heavy-tail expansion g_b(x) ~ sum_k coef_k x^{-kb-1}.
std::vector<double> tail_coefficients(double b, int k_max);

}  // namespace stable

// Tabulated standardized density with pchip interpolation in log-log space,
// the left/right asymptotics outside the table, an integrated CDF and
// quantiles. Fully built (sealed) by the constructor; evaluation afterwards
// is read-only and safe for concurrent use.
class StandardizedStableDensity {
 public:
  explicit StandardizedStableDensity(double b, int table_points = 700);

  double index() const { return b_; }
  double operator()(double x) const;  // density
  double cdf(double x) const;
  double quantile(double p) const;    // p in (0,1)

  double table_lo() const { return x_lo_; }
  double table_hi() const { return x_hi_; }
  double normalization_error() const { return norm_err_; }

 private:
  double b_;
  double x_lo_, x_hi_;
  double series_cut_;  // beyond: series values seed the table
  UniformHermite log_density_;  // log g vs log x, exact slopes
  std::vector<double> cdf_x_, cdf_p_;
  double norm_err_ = 0.0;
  std::vector<double> tail_coef_;
};

}  // namespace fracheat
