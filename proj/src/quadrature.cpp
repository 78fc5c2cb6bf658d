#include "fracheat/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fracheat {

GaussLegendre::GaussLegendre(int n) {
  if (n < 2) throw std::invalid_argument("GaussLegendre: order must be >= 2");
  x_.resize(n);
  w_.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration on P_n with Chebyshev initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x_[i] = -x;
    x_[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    w_[i] = w;
    w_[n - 1 - i] = w;
  }
}

const GaussLegendre& GaussLegendre::order(int n) {
  static std::mutex mu;
  static std::map<int, GaussLegendre*> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, new GaussLegendre(n)).first;
  return *it->second;
}

TanhSinh::TanhSinh() {
  odd_.resize(kMaxLevel + 1);
  const double half_pi = 0.5 * M_PI;
  center_w_ = 0.5 * half_pi;  // step 1/2 at level 1, W(0) = pi/2
  for (int L = 1; L <= kMaxLevel; ++L) {
    const double h = std::ldexp(1.0, -L);
    Level lv;
    const int stride = (L == 1) ? 1 : 2;
    const int start = (L == 1) ? 1 : 1;
    for (int k = start;; k += stride) {
      const double t = k * h;
      const double sh = half_pi * std::sinh(t);
      if (sh > 709.0) break;  // exp overflow guard; weights are zero out here
      const double x = std::tanh(sh);
      const double ch = std::cosh(sh);
      const double w = h * half_pi * std::cosh(t) / (ch * ch);
      // nodes this far out carry no double-precision weight
      if (w < 1e-20 || 1.0 - x <= 0.0) break;
      lv.t.push_back(x);
      lv.w.push_back(w);
    }
    odd_[L] = std::move(lv);
  }
}

const TanhSinh& TanhSinh::instance() {
  static TanhSinh ts;
  return ts;
}

std::vector<double> newton_cotes_weights(int n, double len) {
  if (n < 2) throw std::invalid_argument("newton_cotes_weights: need n >= 2");
  const double h = len / (n - 1);
  std::vector<double> w(n, 0.0);
  int intervals = n - 1;
  int simpson_end = intervals;  // index up to which plain Simpson pairs run
  bool tail38 = false;
  if (intervals == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  if (intervals % 2 != 0) {
    if (intervals >= 3) {
      simpson_end = intervals - 3;
      tail38 = true;
    }
  }
  for (int i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (tail38) {
    const int i = simpson_end;
    w[i] += 3.0 * h / 8.0;
    w[i + 1] += 9.0 * h / 8.0;
    w[i + 2] += 9.0 * h / 8.0;
    w[i + 3] += 3.0 * h / 8.0;
  }
  return w;
}

}  // namespace fracheat
