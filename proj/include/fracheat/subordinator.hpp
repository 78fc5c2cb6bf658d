#pragma once

#include <array>
#include <memory>

#include "fracheat/quadrature.hpp"
#include "fracheat/stable_density.hpp"

namespace fracheat {

// The one-sided stable law mu_t driving the alpha-stable subordination:
//   int_0^inf exp(-lam s) mu_t(ds) = exp(-t lam^{alpha/2}),
// so the subordinated Gaussian semigroup has symbol exp(-t |k|^alpha).
// Self-similarity: density(t,s) = t^{-2/alpha} g(s t^{-2/alpha}) with g the
// standardized density, cached once per alpha by the constructor. After
// construction everything is read-only and data-parallel safe.
class Subordinator {
 public:
  explicit Subordinator(double alpha);

  // process-wide cache; table construction is expensive enough to share
  static std::shared_ptr<const Subordinator> shared(double alpha);

  double alpha() const { return alpha_; }
  double sub_index() const { return beta_; }  // alpha/2

  // density of mu_t at clock value s (> 0)
  double density(double t, double s) const;

  // quadrature of exp(-lam s) against mu_t; the closed target is
  // exp(-t lam^{alpha/2})
  QuadResult laplace(double t, double lam) const;
  double laplace_target(double t, double lam) const;

  // (BJ)-type moment integral J = int s^{-m/2} exp(-lam r^2 / s) mu_t(ds),
  // together with the normalized ratio J (r v t^{1/alpha})^{m+alpha} / t
  // asserted two-sided by the bound.
  struct MomentReport {
    double value;
    double ratio;
    double quad_error;
  };
  MomentReport gauss_moment(double t, double r, double lam, double m) const;

  // Clock integral int_0^inf f(s) mu_t(ds) by quantile-split tanh-sinh in
  // the standardized variable: the same abscissae serve every (x, y) pair,
  // which keeps evaluated kernels exactly symmetric.
  template <class F>
  QuadResult clock_integral(double t, F&& f, int level = 4) const {
    const double scale = std::pow(t, 1.0 / beta_);
    auto g = [&](double u) { return f(scale * u) * (*std_density_)(u); };
    const TanhSinh& ts = TanhSinh::instance();
    double value = 0.0, err = 0.0;
    for (int p = 0; p + 1 < static_cast<int>(splits_.size()); ++p) {
      const QuadResult q = ts.integrate(g, splits_[p], splits_[p + 1], level);
      value += q.value;
      err += q.abs_error;
    }
    // unbounded tail piece via u = q_hi / v
    const double q_hi = splits_.back();
    auto gt = [&](double v) {
      const double u = q_hi / v;
      return f(scale * u) * (*std_density_)(u) * q_hi / (v * v);
    };
    const QuadResult qt = ts.integrate(gt, 0.0, 1.0, level);
    value += qt.value;
    err += qt.abs_error;
    return {value, err};
  }

  const StandardizedStableDensity& standardized() const { return *std_density_; }

  // standardized quantiles used for the split (diagnostic)
  const std::array<double, 5>& splits() const { return splits_; }

 private:
  double alpha_;
  double beta_;
  std::shared_ptr<const StandardizedStableDensity> std_density_;
  std::array<double, 5> splits_{};  // {0, q(1e-6), q(1e-3), q(1/2), q(1-1e-3)}
};

}  // namespace fracheat
