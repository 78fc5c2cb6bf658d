#pragma once

#include <cstddef>
#include <vector>

namespace fracheat {

// Monotone (Fritsch-Carlson) piecewise-cubic Hermite interpolant over an
// increasing abscissa. Shape-preserving: no overshoot between data points.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  bool empty() const { return x_.empty(); }

  static std::vector<double> slopes(const std::vector<double>& x,
                                    const std::vector<double>& y);

 private:
  std::size_t interval(double x) const;
  std::vector<double> x_, y_, d_;
};

// Cubic Hermite over an increasing abscissa with Bessel (parabolic) slope
// estimates: third-order accurate on smooth data, no monotonicity limiting.
// The right choice when the data changes sign or has interior extrema.
class CubicBessel {
 public:
  CubicBessel() = default;
  CubicBessel(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;

 private:
  std::size_t interval(double x) const;
  std::vector<double> x_, y_, d_;
};

// Cubic Hermite on a uniform grid with caller-supplied exact slopes;
// O(h^4) accurate when the slopes are exact. O(1) lookup.
class UniformHermite {
 public:
  UniformHermite() = default;
  UniformHermite(double x0, double dx, std::vector<double> y,
                 std::vector<double> dy);

  double operator()(double x) const;
  double x_min() const { return x0_; }
  double x_max() const { return x0_ + dx_ * (y_.size() - 1); }

 private:
  double x0_ = 0.0, dx_ = 1.0;
  std::vector<double> y_, d_;
};

// Pchip on a uniform grid (O(1) lookup); the workhorse for cached tables.
class UniformPchip {
 public:
  UniformPchip() = default;
  UniformPchip(double x0, double dx, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  double x_min() const { return x0_; }
  double x_max() const { return x0_ + dx_ * (y_.size() - 1); }

 private:
  double x0_ = 0.0, dx_ = 1.0;
  std::vector<double> y_, d_;
};

}  // namespace fracheat
