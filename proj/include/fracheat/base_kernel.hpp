#pragma once

#include "fracheat/geometry.hpp"

namespace fracheat {

// Heat kernel of L = Delta w.r.t. Lebesgue measure: the plain Gaussian
// (4 pi t)^{-d/2} exp(-|x-y|^2 / 4t) on the box, its image sum on the torus.
// Torus evaluation switches between the image sum and the Fourier dual so
// that the dropped tail stays below 1e-15 of the value at every t.
class BaseKernel {
 public:
  explicit BaseKernel(const Domain& dom) : dom_(dom) {}

  const Domain& domain() const { return dom_; }

  double value(double t, const Point& x, const Point& y) const;
  void gradient_x(double t, const Point& x, const Point& y, Vec& g) const;
  // row-major d*d second derivative in x
  void hessian_x(double t, const Point& x, const Point& y, double* h) const;

  // all orders in one pass; grad/hess pointers may be null
  double eval(double t, const Point& x, const Point& y, Vec* grad,
              double* hess) const;

  // per-axis wrapped heat kernel factor and derivatives (torus)
  void axis_theta(double t, double delta, double out[3]) const;

  // Gaussian mass of the truncation box: int_box p(t, x, z) dz (box kind).
  double box_mass(double t, const Point& x) const;

 private:
  Domain dom_;
};

}  // namespace fracheat
