#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracheat {

// The explicit two-sided comparison profile
//   xi(t,r) = t / (mu(M) (r v t^{1/a})^a) + t / (r v t^{1/a})^{d+a};
// an infinite-mass geometry drops the first summand. Also the auxiliary
// profiles xi_m(t,r) = t^{-m/a} ^ (t r^{-(m+a)}).
struct XiProfile {
  double alpha = 1.5;
  int d = 1;
  double total_mass = std::numeric_limits<double>::infinity();

  bool finite_mass() const { return std::isfinite(total_mass); }

  double xi(double t, double r) const {
    const double s = std::max(r, std::pow(t, 1.0 / alpha));
    double v = t / std::pow(s, d + alpha);
    if (finite_mass()) v += t / (total_mass * std::pow(s, alpha));
    return v;
  }

  double xi_m(double m, double t, double r) const {
    const double bulk = std::pow(t, -m / alpha);
    if (r <= 0.0) return bulk;
    return std::min(bulk, t * std::pow(r, -(m + alpha)));
  }
};

}  // namespace fracheat
