#include "fracheat/base_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace fracheat {

namespace {
constexpr double kTailLog = 40.0;  // e^-40 ~ 4e-18 relative truncation
}

void BaseKernel::axis_theta(double t, double delta, double out[3]) const {
  const double L = dom_.extent;
  // term counts for both representations; pick the cheaper
  const int n_img =
      1 + static_cast<int>(std::ceil((std::abs(delta) + 2.0 * std::sqrt(kTailLog * t)) / L));
  const int n_fou =
      1 + static_cast<int>(std::ceil(L * std::sqrt(kTailLog / t) / (2.0 * M_PI)));
  out[0] = out[1] = out[2] = 0.0;
  if (n_img <= n_fou) {
    const double inv4t = 0.25 / t;
    const double pref = 1.0 / std::sqrt(4.0 * M_PI * t);
    for (int k = -n_img; k <= n_img; ++k) {
      const double u = delta + k * L;
      const double e = std::exp(-u * u * inv4t);
      out[0] += e;
      out[1] += e * (-u * 2.0 * inv4t);
      out[2] += e * (u * u * 4.0 * inv4t * inv4t - 2.0 * inv4t);
    }
    out[0] *= pref;
    out[1] *= pref;
    out[2] *= pref;
  } else {
    const double w = 2.0 * M_PI / L;
    out[0] = 1.0 / L;
    for (int n = 1; n <= n_fou; ++n) {
      const double wn = w * n;
      const double e = std::exp(-wn * wn * t) * 2.0 / L;
      out[0] += e * std::cos(wn * delta);
      out[1] -= e * wn * std::sin(wn * delta);
      out[2] -= e * wn * wn * std::cos(wn * delta);
    }
  }
}

double BaseKernel::eval(double t, const Point& x, const Point& y, Vec* grad,
                        double* hess) const {
  if (!(t > 0.0)) throw std::invalid_argument("BaseKernel: t <= 0");
  const int d = dom_.d;
  if (dom_.kind == DomainKind::euclidean_box) {
    double r2 = 0.0;
    Vec delta{};
    for (int i = 0; i < d; ++i) {
      delta[i] = x[i] - y[i];
      r2 += delta[i] * delta[i];
    }
    const double inv4t = 0.25 / t;
    const double expo = -r2 * inv4t;
    const double v =
        (expo < -745.0) ? 0.0
                        : std::pow(4.0 * M_PI * t, -0.5 * d) * std::exp(expo);
    if (grad)
      for (int i = 0; i < d; ++i) (*grad)[i] = v * (-delta[i] * 2.0 * inv4t);
    if (hess) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double hij = v * delta[i] * delta[j] * 4.0 * inv4t * inv4t;
          if (i == j) hij -= v * 2.0 * inv4t;
          hess[i * d + j] = hij;
        }
    }
    return v;
  }
  // torus: product of per-axis wrapped factors
  double th[kMaxDim][3];
  for (int i = 0; i < d; ++i) axis_theta(t, dom_.axis_diff(x[i], y[i]), th[i]);
  double v = 1.0;
  for (int i = 0; i < d; ++i) v *= th[i][0];
  if (grad) {
    for (int i = 0; i < d; ++i) {
      double g = th[i][1];
      for (int j = 0; j < d; ++j)
        if (j != i) g *= th[j][0];
      (*grad)[i] = g;
    }
  }
  if (hess) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double hij = 1.0;
        for (int k = 0; k < d; ++k) {
          if (k == i && k == j)
            hij *= th[k][2];
          else if (k == i || k == j)
            hij *= th[k][1];
          else
            hij *= th[k][0];
        }
        hess[i * d + j] = hij;
      }
  }
  return v;
}

double BaseKernel::value(double t, const Point& x, const Point& y) const {
  return eval(t, x, y, nullptr, nullptr);
}

void BaseKernel::gradient_x(double t, const Point& x, const Point& y,
                            Vec& g) const {
  eval(t, x, y, &g, nullptr);
}

void BaseKernel::hessian_x(double t, const Point& x, const Point& y,
                           double* h) const {
  eval(t, x, y, nullptr, h);
}

double BaseKernel::box_mass(double t, const Point& x) const {
  if (dom_.kind != DomainKind::euclidean_box)
    throw std::logic_error("box_mass: torus kernel has unit mass");
  const double R = dom_.extent;
  const double den = 2.0 * std::sqrt(t);
  double m = 1.0;
  for (int i = 0; i < dom_.d; ++i) {
    m *= 0.5 * (std::erf((R - x[i]) / den) + std::erf((R + x[i]) / den));
  }
  return m;
}

}  // namespace fracheat
