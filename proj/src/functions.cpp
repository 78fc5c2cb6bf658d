#include "fracheat/functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fracheat {

double TimeProfile::operator()(double t) const {
  if (t < 0.0) return 0.0;
  switch (kind) {
    case one: return 1.0;
    case window: return (t >= t0 && t <= t1) ? 1.0 : 0.0;
    case power_decay: return std::pow(1.0 + t, -a);
    case power_sing: return t > 0.0 ? std::pow(t, -a) : 0.0;
  }
  return 0.0;
}

std::vector<double> TimeProfile::sup_candidates(double eps) const {
  std::vector<double> c{eps, 2.0 * eps};
  switch (kind) {
    case one: break;
    case window:
      c.push_back(t0);
      c.push_back(t0 + eps);
      c.push_back(std::max(0.0, t1 - eps));
      c.push_back(0.5 * (t0 + t1));
      break;
    case power_decay:
    case power_sing:
      c.push_back(0.0);
      c.push_back(eps);
      break;
  }
  c.push_back(0.0);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

namespace {

// C-infinity bump profile on u in [0,1): exp(1 - 1/(1-u^2)); 0 outside.
inline double bump_profile(double u) {
  if (u >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

inline double bump_profile_du(double u) {
  if (u >= 1.0 || u <= 0.0) return 0.0;
  const double q = 1.0 - u * u;
  return bump_profile(u) * (-2.0 * u / (q * q));
}

}  // namespace

ScalarField ScalarField::make_zero() { return {}; }

ScalarField ScalarField::make_constant(double kappa, TimeProfile g) {
  ScalarField f;
  f.kind_ = constant;
  f.height_ = kappa;
  f.g_ = g;
  return f;
}

ScalarField ScalarField::make_bump(const Point& center, double width,
                                   double height, TimeProfile g) {
  if (!(width > 0.0)) throw std::invalid_argument("bump: width <= 0");
  ScalarField f;
  f.kind_ = bump;
  f.center_ = center;
  f.width_ = width;
  f.height_ = height;
  f.g_ = g;
  return f;
}

ScalarField ScalarField::make_radial_power(const Point& center, double theta,
                                           TimeProfile g) {
  if (theta < 0.0) throw std::invalid_argument("radial_power: theta < 0");
  ScalarField f;
  f.kind_ = radial_power;
  f.center_ = center;
  f.theta_ = theta;
  f.height_ = 1.0;
  f.g_ = g;
  return f;
}

double ScalarField::spatial(const Domain& dom, const Point& x) const {
  switch (kind_) {
    case zero: return 0.0;
    case constant: return height_;
    case bump: return height_ * bump_profile(dom.distance(x, center_) / width_);
    case radial_power: {
      const double r = dom.distance(x, center_);
      if (r <= 0.0) return std::numeric_limits<double>::infinity();
      return height_ * std::pow(r, -theta_);
    }
  }
  return 0.0;
}

Vec ScalarField::spatial_gradient(const Domain& dom, const Point& x) const {
  Vec g{};
  if (kind_ == bump) {
    const double r = dom.distance(x, center_);
    if (r <= 0.0 || r >= width_) return g;
    const double du = height_ * bump_profile_du(r / width_) / width_;
    for (int i = 0; i < dom.d; ++i)
      g[i] = du * dom.axis_diff(x[i], center_[i]) / r;
  } else if (kind_ == radial_power) {
    const double r = dom.distance(x, center_);
    if (r <= 0.0) return g;
    const double dr = -theta_ * height_ * std::pow(r, -theta_ - 1.0);
    for (int i = 0; i < dom.d; ++i)
      g[i] = dr * dom.axis_diff(x[i], center_[i]) / r;
  }
  return g;
}

SpatialInfo ScalarField::spatial_info(const Domain& dom) const {
  SpatialInfo info;
  info.far_center = center_;
  switch (kind_) {
    case zero:
      break;
    case constant:
      info.far_coeff = std::abs(height_);
      info.far_theta = 0.0;
      break;
    case bump:
      info.breakpoints = {center_[0] - width_, center_[0] + width_};
      info.far_coeff = 0.0;
      info.far_radius = width_;
      break;
    case radial_power:
      info.breakpoints = {center_[0]};
      info.sing_coord = center_[0];
      info.sing_theta = theta_;
      info.far_coeff = std::abs(height_);
      info.far_theta = theta_;
      info.far_radius = 0.0;
      break;
  }
  (void)dom;
  return info;
}

DriftField DriftField::make_zero() { return {}; }

DriftField DriftField::make_constant(const Vec& v, TimeProfile g) {
  DriftField b;
  b.kind_ = constant_vec;
  b.amp_ = v;
  b.g_ = g;
  return b;
}

DriftField DriftField::make_bump(const Point& center, double width,
                                 const Vec& amplitude, TimeProfile g) {
  if (!(width > 0.0)) throw std::invalid_argument("bump drift: width <= 0");
  DriftField b;
  b.kind_ = bump_vec;
  b.center_ = center;
  b.width_ = width;
  b.amp_ = amplitude;
  b.g_ = g;
  return b;
}

DriftField DriftField::make_swirl(const Point& center, double width,
                                  double omega, TimeProfile g) {
  if (!(width > 0.0)) throw std::invalid_argument("swirl: width <= 0");
  DriftField b;
  b.kind_ = swirl;
  b.center_ = center;
  b.width_ = width;
  b.omega_ = omega;
  b.g_ = g;
  return b;
}

Vec DriftField::operator()(const Domain& dom, double t, const Point& x) const {
  Vec v{};
  const double gt = g_(t);
  if (gt == 0.0) return v;
  switch (kind_) {
    case zero:
      break;
    case constant_vec:
      for (int i = 0; i < dom.d; ++i) v[i] = gt * amp_[i];
      break;
    case bump_vec: {
      const double psi = bump_profile(dom.distance(x, center_) / width_);
      for (int i = 0; i < dom.d; ++i) v[i] = gt * amp_[i] * psi;
      break;
    }
    case swirl: {
      if (dom.d != 2) throw std::logic_error("swirl drift requires d = 2");
      const double dx0 = dom.axis_diff(x[0], center_[0]);
      const double dx1 = dom.axis_diff(x[1], center_[1]);
      const double r = std::sqrt(dx0 * dx0 + dx1 * dx1);
      const double q = bump_profile(r / width_);
      v[0] = -gt * omega_ * q * dx1;
      v[1] = gt * omega_ * q * dx0;
      break;
    }
  }
  return v;
}

double DriftField::magnitude(const Domain& dom, double t, const Point& x) const {
  const Vec v = (*this)(dom, t, x);
  double s = 0.0;
  for (int i = 0; i < dom.d; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

double DriftField::magnitude_spatial(const Domain& dom, const Point& x) const {
  DriftField flat = *this;
  flat.g_ = TimeProfile{};  // unit time factor
  return flat.magnitude(dom, 0.0, x);
}

// every built-in family carries a closed-form divergence
bool DriftField::has_analytic_divergence() const { return true; }

double DriftField::divergence(const Domain& dom, double t, const Point& x) const {
  const double gt = g_(t);
  if (gt == 0.0) return 0.0;
  switch (kind_) {
    case zero:
    case constant_vec:
      return 0.0;
    case bump_vec: {
      const double r = dom.distance(x, center_);
      if (r <= 0.0 || r >= width_) return 0.0;
      const double du = bump_profile_du(r / width_) / width_;
      double s = 0.0;
      for (int i = 0; i < dom.d; ++i)
        s += amp_[i] * du * dom.axis_diff(x[i], center_[i]) / r;
      return gt * s;
    }
    case swirl:
      return 0.0;  // rotation with radial profile is divergence free
  }
  return 0.0;
}

SpatialInfo DriftField::magnitude_info(const Domain& dom) const {
  SpatialInfo info;
  info.far_center = center_;
  switch (kind_) {
    case zero:
      break;
    case constant_vec:
      info.far_coeff = amplitude_norm();
      break;
    case bump_vec:
    case swirl:
      info.breakpoints = {center_[0] - width_, center_[0] + width_};
      info.far_radius = width_;
      break;
  }
  (void)dom;
  return info;
}

double DriftField::amplitude_norm() const {
  double s = 0.0;
  for (double v : amp_) s += v * v;
  const double base = std::sqrt(s);
  return kind_ == swirl ? std::abs(omega_) * width_ : base;
}

}  // namespace fracheat
