#pragma once

#include <string>
#include <vector>

#include "fracheat/geometry.hpp"

namespace fracheat {

// Built-in time profiles. A function on [0,inf) x M is extended by zero to
// negative times, so every profile returns 0 for t < 0.
struct TimeProfile {
  enum Kind { one, window, power_decay, power_sing } kind = one;
  double t0 = 0.0, t1 = 1.0;  // window bounds
  double a = 0.0;             // power exponent

  double operator()(double t) const;
  bool time_independent() const { return kind == one; }
  // candidate times where sup_t of a Kato functional can be attained
  std::vector<double> sup_candidates(double eps) const;
};

// Metadata consumed by the singularity-aware spatial integrators.
struct SpatialInfo {
  std::vector<double> breakpoints;  // axis-0 coordinates of kinks (1D use)
  double sing_coord = 0.0;          // location of a power singularity
  double sing_theta = 0.0;          // |f| ~ coeff * rho^{-theta} there; 0 = none
  double far_coeff = 0.0;           // |f(y)| <= far_coeff * rho(y, far_center)^{-far_theta}
  double far_theta = 0.0;           //   valid beyond far_radius
  double far_radius = 0.0;
  Point far_center{};
};

// Scalar time-space function from the built-in families.
class ScalarField {
 public:
  enum Kind { zero, constant, bump, radial_power };

  static ScalarField make_zero();
  static ScalarField make_constant(double kappa, TimeProfile g = {});
  static ScalarField make_bump(const Point& center, double width, double height,
                               TimeProfile g = {});
  static ScalarField make_radial_power(const Point& center, double theta,
                                       TimeProfile g = {});

  Kind kind() const { return kind_; }
  const TimeProfile& time_profile() const { return g_; }
  bool time_independent() const { return g_.time_independent(); }
  bool is_zero() const { return kind_ == zero; }

  double spatial(const Domain& dom, const Point& x) const;
  double operator()(const Domain& dom, double t, const Point& x) const {
    return g_(t) * spatial(dom, x);
  }
  // gradient of the spatial part (bump only; zero elsewhere except the
  // radial power away from its singularity)
  Vec spatial_gradient(const Domain& dom, const Point& x) const;

  SpatialInfo spatial_info(const Domain& dom) const;

  double height() const { return height_; }
  double width() const { return width_; }
  double theta() const { return theta_; }
  const Point& center() const { return center_; }

 private:
  Kind kind_ = zero;
  TimeProfile g_;
  Point center_{};
  double width_ = 1.0, height_ = 0.0, theta_ = 0.0;
};

// Vector drift field from the built-in families, with analytic divergence
// where the family provides one (div_mu = ordinary divergence: the flat
// reference measures here are Lebesgue).
class DriftField {
 public:
  enum Kind { zero, constant_vec, bump_vec, swirl };

  static DriftField make_zero();
  static DriftField make_constant(const Vec& v, TimeProfile g = {});
  // scalar bump envelope times a fixed direction
  static DriftField make_bump(const Point& center, double width,
                              const Vec& amplitude, TimeProfile g = {});
  // d = 2 divergence-free rotation with a radial bump profile
  static DriftField make_swirl(const Point& center, double width, double omega,
                               TimeProfile g = {});

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == zero; }
  bool time_independent() const { return g_.time_independent(); }
  const TimeProfile& time_profile() const { return g_; }

  Vec operator()(const Domain& dom, double t, const Point& x) const;
  double magnitude(const Domain& dom, double t, const Point& x) const;

  bool has_analytic_divergence() const;
  double divergence(const Domain& dom, double t, const Point& x) const;

  // |b| as a scalar field surrogate for Kato-functional integration
  SpatialInfo magnitude_info(const Domain& dom) const;
  double magnitude_spatial(const Domain& dom, const Point& x) const;

  double amplitude_norm() const;

 private:
  Kind kind_ = zero;
  TimeProfile g_;
  Point center_{};
  double width_ = 1.0, omega_ = 0.0;
  Vec amp_{};
};

}  // namespace fracheat
