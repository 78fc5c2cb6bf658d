#pragma once

#include <memory>
#include <vector>

#include "fracheat/interp.hpp"
#include "fracheat/subordinator.hpp"

namespace fracheat {

// Cached standardized profile of the isotropic alpha-stable kernel on R^d:
//   p(t, r) = t^{-d/a} P(r t^{-1/a}),  P(w) = p(1, w).
// P and its radial derivative are tabulated once per (alpha, d) from the
// clock integral of the Gaussian, with the analytic heavy-tail expansion
// beyond the table. Exact self-similarity makes this the fast path inside
// the Picard narrow-kernel quadratures.
class StableProfile {
 public:
  StableProfile(std::shared_ptr<const Subordinator> sub, int d);

  int dim() const { return d_; }
  double alpha() const { return sub_->alpha(); }

  double density(double w) const;        // P(w), w >= 0
  double radial_deriv(double w) const;   // dP/dw

  double value(double t, double r) const {
    const double s = std::pow(t, -1.0 / alpha());
    return std::pow(s, d_) * density(r * s);
  }
  double dvalue_dr(double t, double r) const {
    const double s = std::pow(t, -1.0 / alpha());
    return std::pow(s, d_ + 1.0) * radial_deriv(r * s);
  }

  // wrapped kernel by image sum over the radial profile; intended for the
  // narrow regime t^{1/a} << L where few images carry all the mass
  double torus_value(double t, const double* delta, double L,
                     int images = 4) const;

  // heavy-tail coefficients: P(w) ~ sum_k coef[k] w^{-(d + 2 k beta)}
  const std::vector<double>& tail_coefficients() const { return tail_; }

  // d = 1 only: one-sided tail mass int_w^inf P(u) du; gives the exact mass
  // of a truncation interval under the scaled kernel
  double mass_beyond(double w) const;

 private:
  std::shared_ptr<const Subordinator> sub_;
  int d_;
  double w_switch_, w_max_;
  UniformHermite lin_p_, lin_dp_;  // uniform table on [0, w_switch]
  UniformHermite log_p_, log_dp_;  // log-log table on (w_switch, w_max]
  UniformHermite lin_m_, log_m_;   // one-sided tail mass (d = 1)
  std::vector<double> tail_;
};

}  // namespace fracheat
