#include "fracheat/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fracheat {

namespace {

// Fritsch-Carlson limited slopes for data (x, y).
std::vector<double> fc_slopes(const std::vector<double>& x,
                              const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n == 1) return d;
  std::vector<double> h(n - 1), del(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    del[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = del[0];
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (del[i - 1] * del[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
    }
  }
  auto edge = [](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0)
      d = 0.0;
    else if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0))
      d = 3.0 * d0;
    return d;
  };
  d[0] = edge(h[0], h[1], del[0], del[1]);
  d[n - 1] = edge(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  return d;
}

inline double hermite(double t, double h, double y0, double y1, double d0,
                      double d1) {
  const double t2 = t * t, t3 = t2 * t;
  return y0 * (2 * t3 - 3 * t2 + 1) + h * d0 * (t3 - 2 * t2 + t) +
         y1 * (-2 * t3 + 3 * t2) + h * d1 * (t3 - t2);
}

inline double hermite_deriv(double t, double h, double y0, double y1,
                            double d0, double d1) {
  const double t2 = t * t;
  return (y0 * (6 * t2 - 6 * t) + h * d0 * (3 * t2 - 4 * t + 1) +
          y1 * (-6 * t2 + 6 * t) + h * d1 * (3 * t2 - 2 * t)) /
         h;
}

}  // namespace

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 2)
    throw std::invalid_argument("Pchip: need >= 2 points");
  d_ = fc_slopes(x_, y_);
}

std::vector<double> Pchip::slopes(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  return fc_slopes(x, y);
}

std::size_t Pchip::interval(double x) const {
  if (x <= x_.front()) return 0;
  if (x >= x_.back()) return x_.size() - 2;
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double Pchip::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  return hermite(t, h, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

double Pchip::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  return hermite_deriv(t, h, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

CubicBessel::CubicBessel(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 2)
    throw std::invalid_argument("CubicBessel: need >= 2 points");
  const std::size_t n = x_.size();
  d_.resize(n);
  if (n == 2) {
    d_[0] = d_[1] = (y_[1] - y_[0]) / (x_[1] - x_[0]);
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
    const double d0 = (y_[i] - y_[i - 1]) / h0;
    const double d1 = (y_[i + 1] - y_[i]) / h1;
    d_[i] = (h1 * d0 + h0 * d1) / (h0 + h1);
  }
  {
    const double h0 = x_[1] - x_[0], h1 = x_[2] - x_[1];
    const double d0 = (y_[1] - y_[0]) / h0, d1 = (y_[2] - y_[1]) / h1;
    d_[0] = d0 + (d0 - d1) * h0 / (h0 + h1);
    const std::size_t m = n - 1;
    const double g0 = x_[m] - x_[m - 1], g1 = x_[m - 1] - x_[m - 2];
    const double e0 = (y_[m] - y_[m - 1]) / g0,
                 e1 = (y_[m - 1] - y_[m - 2]) / g1;
    d_[m] = e0 + (e0 - e1) * g0 / (g0 + g1);
  }
}

std::size_t CubicBessel::interval(double x) const {
  if (x <= x_.front()) return 0;
  if (x >= x_.back()) return x_.size() - 2;
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double CubicBessel::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  return hermite(t, h, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

UniformHermite::UniformHermite(double x0, double dx, std::vector<double> y,
                               std::vector<double> dy)
    : x0_(x0), dx_(dx), y_(std::move(y)), d_(std::move(dy)) {
  if (y_.size() < 2 || y_.size() != d_.size())
    throw std::invalid_argument("UniformHermite: bad sizes");
}

double UniformHermite::operator()(double x) const {
  double u = (x - x0_) / dx_;
  const double max_i = static_cast<double>(y_.size() - 2);
  if (u < 0.0) u = 0.0;
  if (u > max_i + 1.0) u = max_i + 1.0;
  std::size_t i = static_cast<std::size_t>(u);
  if (i > static_cast<std::size_t>(max_i)) i = static_cast<std::size_t>(max_i);
  const double t = u - i;
  return hermite(t, dx_, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

UniformPchip::UniformPchip(double x0, double dx, std::vector<double> y)
    : x0_(x0), dx_(dx), y_(std::move(y)) {
  if (y_.size() < 2) throw std::invalid_argument("UniformPchip: need >= 2");
  std::vector<double> x(y_.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0_ + dx_ * i;
  d_ = fc_slopes(x, y_);
}

double UniformPchip::operator()(double x) const {
  double u = (x - x0_) / dx_;
  const double max_i = static_cast<double>(y_.size() - 2);
  if (u < 0.0) u = 0.0;
  if (u > max_i + 1.0) u = max_i + 1.0;
  std::size_t i = static_cast<std::size_t>(u);
  if (i > static_cast<std::size_t>(max_i)) i = static_cast<std::size_t>(max_i);
  const double t = u - i;
  return hermite(t, dx_, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

double UniformPchip::derivative(double x) const {
  double u = (x - x0_) / dx_;
  const double max_i = static_cast<double>(y_.size() - 2);
  if (u < 0.0) u = 0.0;
  if (u > max_i + 1.0) u = max_i + 1.0;
  std::size_t i = static_cast<std::size_t>(u);
  if (i > static_cast<std::size_t>(max_i)) i = static_cast<std::size_t>(max_i);
  const double t = u - i;
  return hermite_deriv(t, dx_, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

}  // namespace fracheat
