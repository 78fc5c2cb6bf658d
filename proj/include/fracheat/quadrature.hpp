#pragma once

#include <cmath>
#include <vector>

namespace fracheat {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;  // estimated
};

// Gauss-Legendre nodes/weights on [-1,1], memoized per order.
class GaussLegendre {
 public:
  static const GaussLegendre& order(int n);

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& weights() const { return w_; }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) s += w_[i] * f(c + h * x_[i]);
    return h * s;
  }

 private:
  explicit GaussLegendre(int n);
  std::vector<double> x_, w_;
};

// Tanh-sinh rule on (-1,1). The node tables are built once; a fixed level
// gives a deterministic node set shared by every evaluation, and the error
// is estimated from the difference against the next-coarser level.
//
// Level L sums the trapezoid rule at step 2^-L in the tanh-sinh variable:
//   I_L = I_{L-1}/2 + (new nodes at odd multiples of 2^-L).
class TanhSinh {
 public:
  static const TanhSinh& instance();

  static constexpr int kMaxLevel = 9;

  template <class F>
  QuadResult integrate(F&& f, double a, double b, int level = 5) const {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    auto g = [&](double t) { return f(c + h * t); };
    double coarse = 0.0;
    double cur = base_level(g);
    if (level < 2) return {h * cur, h * std::abs(cur)};
    for (int L = 2; L <= level; ++L) {
      coarse = cur;
      cur = 0.5 * cur + delta_level(g, L);
    }
    return {h * cur, h * std::abs(cur - coarse)};
  }

  // Visit every node of the level-L rule on (-1,1) as (t, weight, is_finest):
  // is_finest marks the nodes new at level L, from which the level-(L-1)
  // value can be recovered for an error estimate without a second pass.
  template <class V>
  void for_nodes(int level, V&& visit) const {
    visit(0.0, center_w_ * std::ldexp(1.0, -(level - 1)), level == 1);
    for (int l = 1; l <= level; ++l) {
      const double scale = std::ldexp(1.0, -(level - l));
      const Level& lv = odd_[l];
      const bool finest = (l == level);
      for (std::size_t i = 0; i < lv.t.size(); ++i) {
        visit(lv.t[i], lv.w[i] * scale, finest);
        visit(-lv.t[i], lv.w[i] * scale, finest);
      }
    }
  }

 private:
  TanhSinh();

  struct Level {
    std::vector<double> t;  // positive abscissae in (0,1)
    std::vector<double> w;  // weights, step included
  };

  template <class F>
  double base_level(F&& g) const {
    const Level& lv = odd_[1];
    double s = center_w_ * g(0.0);
    for (std::size_t i = 0; i < lv.t.size(); ++i)
      s += lv.w[i] * (g(lv.t[i]) + g(-lv.t[i]));
    return s;
  }

  template <class F>
  double delta_level(F&& g, int L) const {
    const Level& lv = odd_[L];
    double s = 0.0;
    for (std::size_t i = 0; i < lv.t.size(); ++i)
      s += lv.w[i] * (g(lv.t[i]) + g(-lv.t[i]));
    return s;
  }

  double center_w_ = 0.0;      // step * W(0) at level 1
  std::vector<Level> odd_;     // odd_[1] = all level-1 nodes; odd_[L>=2] = odd multiples of 2^-L
};

// Composite Newton-Cotes weights for n uniformly spaced nodes spanning an
// interval of length len: Simpson when the interval count is even, Simpson
// plus a 3/8 tail otherwise. n >= 2.
std::vector<double> newton_cotes_weights(int n, double len);

}  // namespace fracheat
