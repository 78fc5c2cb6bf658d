#include "fracheat/subordinator.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fracheat {

std::shared_ptr<const Subordinator> Subordinator::shared(double alpha) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<const Subordinator>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(alpha);
  if (it == cache.end())
    it = cache.emplace(alpha, std::make_shared<Subordinator>(alpha)).first;
  return it->second;
}

Subordinator::Subordinator(double alpha) : alpha_(alpha), beta_(0.5 * alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("Subordinator: alpha outside (0,2)");
  std_density_ = std::make_shared<StandardizedStableDensity>(beta_);
  splits_[0] = 0.0;
  splits_[1] = std_density_->quantile(1e-6);
  splits_[2] = std_density_->quantile(1e-3);
  splits_[3] = std_density_->quantile(0.5);
  splits_[4] = std_density_->quantile(1.0 - 1e-3);
}

double Subordinator::density(double t, double s) const {
  if (!(t > 0.0)) throw std::invalid_argument("density: t <= 0");
  if (!(s > 0.0)) throw std::invalid_argument("density: s <= 0");
  const double scale = std::pow(t, -1.0 / beta_);
  return scale * (*std_density_)(s * scale);
}

double Subordinator::laplace_target(double t, double lam) const {
  return std::exp(-t * std::pow(lam, beta_));
}

QuadResult Subordinator::laplace(double t, double lam) const {
  if (!(t > 0.0)) throw std::invalid_argument("laplace: t <= 0");
  if (lam < 0.0) throw std::invalid_argument("laplace: lam < 0");
  return clock_integral(t, [&](double s) { return std::exp(-lam * s); }, 5);
}

Subordinator::MomentReport Subordinator::gauss_moment(double t, double r,
                                                      double lam,
                                                      double m) const {
  if (!(t > 0.0)) throw std::invalid_argument("gauss_moment: t <= 0");
  if (r < 0.0 || m < 0.0)
    throw std::invalid_argument("gauss_moment: negative r or m");
  auto f = [&](double s) {
    const double expo = (r > 0.0) ? -lam * r * r / s : 0.0;
    if (expo < -745.0) return 0.0;
    return std::pow(s, -0.5 * m) * std::exp(expo);
  };
  const QuadResult q = clock_integral(t, f, 5);
  const double scale = std::max(r, std::pow(t, 1.0 / alpha_));
  const double ratio = q.value * std::pow(scale, m + alpha_) / t;
  return {q.value, ratio, q.abs_error};
}

}  // namespace fracheat
