#include "fracheat/stable_density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracheat/quadrature.hpp"

namespace fracheat {
namespace stable {

namespace {

// log of Zolotarev's function A_b(phi) on (0, pi), increasing in phi.
inline double log_zolotarev(double b, double phi) {
  const double one_m = 1.0 - b;
  return (b / one_m) * std::log(std::sin(b * phi)) +
         std::log(std::sin(one_m * phi)) -
         (1.0 / one_m) * std::log(std::sin(phi));
}

}  // namespace

double kanter_density(double b, double x, int ts_level, double* dlog) {
  if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("index outside (0,1)");
  if (!(x > 0.0)) return 0.0;
  const double one_m = 1.0 - b;
  const double c = std::pow(x, -b / one_m);
  const TanhSinh& ts = TanhSinh::instance();
  double i1 = 0.0, i2 = 0.0;  // int A e^{-cA}, int A^2 e^{-cA}
  ts.for_nodes(ts_level, [&](double tt, double ww, bool) {
    const double phi = 0.5 * M_PI * (1.0 + tt);
    if (phi <= 0.0 || phi >= M_PI) return;
    const double la = log_zolotarev(b, phi);
    const double arg = la - c * std::exp(la);
    if (arg < -745.0) return;
    const double v = std::exp(arg) * ww * 0.5 * M_PI;
    i1 += v;
    const double v2 = arg + la;
    i2 += (v2 < -745.0) ? 0.0 : std::exp(v2) * ww * 0.5 * M_PI;
  });
  const double pref = (b / one_m) * std::pow(x, -1.0 / one_m) / M_PI;
  if (dlog) {
    // x g'/g = -1/(1-b) + (b/(1-b)) c * (I2 / I1)
    *dlog = -1.0 / one_m + (b / one_m) * c * (i2 / std::max(i1, 1e-300));
  }
  return pref * i1;
}

double series_density(double b, double x, int max_terms,
                      double* cancellation_ratio, double* dlog) {
  const double lx = std::log(x);
  double sum = 0.0, dsum = 0.0, max_abs = 0.0;
  int tiny_run = 0;  // sin(pi k b) can vanish at isolated k; require two in a row
  for (int k = 1; k <= max_terms; ++k) {
    const double lt = std::lgamma(k * b + 1.0) - std::lgamma(k + 1.0) -
                      (k * b + 1.0) * lx;
    const double term = std::exp(lt) * std::sin(M_PI * k * b) *
                        ((k % 2 == 1) ? 1.0 : -1.0);
    sum += term;
    dsum += term * (-(k * b + 1.0));
    max_abs = std::max(max_abs, std::abs(term));
    tiny_run = (std::abs(term) < 1e-18 * std::max(1e-300, std::abs(sum)))
                   ? tiny_run + 1
                   : 0;
    if (tiny_run >= 2 && k > 4) break;
  }
  if (cancellation_ratio)
    *cancellation_ratio = max_abs / std::max(1e-300, std::abs(sum));
  if (dlog) *dlog = dsum / sum;
  return sum / M_PI;
}

double left_asymptotic(double b, double x) {
  const double one_m = 1.0 - b;
  const double a = one_m * std::pow(b, b / one_m);
  const double c = std::pow(b, 0.5 / one_m) / std::sqrt(2.0 * M_PI * one_m);
  const double expo = -a * std::pow(x, -b / one_m);
  if (expo < -745.0) return 0.0;
  return c * std::pow(x, -(2.0 - b) / (2.0 * one_m)) * std::exp(expo);
}

std::vector<double> tail_coefficients(double b, int k_max) {
  std::vector<double> c(k_max);
  for (int k = 1; k <= k_max; ++k) {
    c[k - 1] = std::exp(std::lgamma(k * b + 1.0) - std::lgamma(k + 1.0)) *
               std::sin(M_PI * k * b) * ((k % 2 == 1) ? 1.0 : -1.0) / M_PI;
  }
  return c;
}

}  // namespace stable

StandardizedStableDensity::StandardizedStableDensity(double b, int table_points)
    : b_(b) {
  if (!(b > 0.0 && b < 1.0))
    throw std::invalid_argument("StandardizedStableDensity: index outside (0,1)");
  const double one_m = 1.0 - b;

  // left edge: where the exponential factor reaches e^-42 (density ~ 1e-19)
  const double a_coef = one_m * std::pow(b, b / one_m);
  x_lo_ = std::pow(a_coef / 42.0, one_m / b);
  // right edge: well into the series-dominated regime
  x_hi_ = 64.0;
  series_cut_ = 8.0;

  const double l0 = std::log(x_lo_), l1 = std::log(x_hi_);
  const double dl = (l1 - l0) / (table_points - 1);
  std::vector<double> lg(table_points), dlg(table_points);
  for (int i = 0; i < table_points; ++i) {
    const double x = std::exp(l0 + dl * i);
    double g, dlog = 0.0;
    if (x >= series_cut_) {
      double cancel = 0.0;
      g = stable::series_density(b_, x, 80, &cancel, &dlog);
      if (cancel > 1e8) g = stable::kanter_density(b_, x, 7, &dlog);
    } else {
      g = stable::kanter_density(b_, x, 7, &dlog);
    }
    lg[i] = std::log(std::max(g, 1e-300));
    dlg[i] = dlog;
  }
  log_density_ = UniformHermite(l0, dl, std::move(lg), std::move(dlg));
  tail_coef_ = stable::tail_coefficients(b_, 16);

  // CDF by Simpson in the log variable (uniform steps, midpoint exact):
  // int g(x) dx = int g(e^u) e^u du.
  const int sub = 4;
  cdf_x_.reserve(static_cast<std::size_t>(table_points) * sub + 1);
  cdf_p_.reserve(cdf_x_.size());
  cdf_x_.push_back(x_lo_);
  cdf_p_.push_back(0.0);  // mass below x_lo is ~1e-19
  double acc = 0.0;
  const int fine_n = (table_points - 1) * sub;
  const double dfl = (l1 - l0) / fine_n;
  auto fu = [&](double u) {
    const double x = std::exp(u);
    return (*this)(x)*x;
  };
  double prev_u = l0, prev_f = fu(l0);
  for (int i = 1; i <= fine_n; ++i) {
    const double u = l0 + dfl * i;
    const double f = fu(u);
    const double fm = fu(l0 + dfl * (i - 0.5));
    acc += (u - prev_u) / 6.0 * (prev_f + 4.0 * fm + f);
    cdf_x_.push_back(std::exp(u));
    cdf_p_.push_back(acc);
    prev_u = u;
    prev_f = f;
  }
  // analytic tail mass beyond x_hi from the series, integrated termwise
  double tail = 0.0;
  for (std::size_t k = 1; k <= tail_coef_.size(); ++k)
    tail += tail_coef_[k - 1] * std::pow(x_hi_, -static_cast<double>(k) * b_) /
            (static_cast<double>(k) * b_);
  norm_err_ = acc + tail - 1.0;
  // normalize the CDF so quantiles hit (0,1) exactly
  const double total = acc + tail;
  for (auto& p : cdf_p_) p /= total;
}

double StandardizedStableDensity::operator()(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (x < x_lo_) return stable::left_asymptotic(b_, x);
  if (x > x_hi_) {
    double s = 0.0;
    for (std::size_t k = 1; k <= tail_coef_.size(); ++k)
      s += tail_coef_[k - 1] * std::pow(x, -(static_cast<double>(k) * b_ + 1.0));
    return std::max(s, 0.0);
  }
  return std::exp(log_density_(std::log(x)));
}

double StandardizedStableDensity::cdf(double x) const {
  if (x <= cdf_x_.front()) return 0.0;
  if (x >= cdf_x_.back()) {
    double tail = 0.0;
    for (std::size_t k = 1; k <= tail_coef_.size(); ++k)
      tail += tail_coef_[k - 1] * std::pow(x, -static_cast<double>(k) * b_) /
              (static_cast<double>(k) * b_);
    return 1.0 - tail;
  }
  auto it = std::upper_bound(cdf_x_.begin(), cdf_x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - cdf_x_.begin()) - 1;
  const double t = (x - cdf_x_[i]) / (cdf_x_[i + 1] - cdf_x_[i]);
  return cdf_p_[i] + t * (cdf_p_[i + 1] - cdf_p_[i]);
}

double StandardizedStableDensity::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("quantile: p outside (0,1)");
  if (p <= cdf_p_.front()) return cdf_x_.front();
  if (p >= cdf_p_.back()) {
    // invert the leading tail term 1 - F ~ coef/(b) x^{-b}
    const double lead = tail_coef_[0] / b_;
    return std::pow(lead / (1.0 - p), 1.0 / b_);
  }
  auto it = std::lower_bound(cdf_p_.begin(), cdf_p_.end(), p);
  std::size_t i = static_cast<std::size_t>(it - cdf_p_.begin());
  if (i == 0) i = 1;
  const double t = (p - cdf_p_[i - 1]) / (cdf_p_[i] - cdf_p_[i - 1]);
  return cdf_x_[i - 1] + t * (cdf_x_[i] - cdf_x_[i - 1]);
}

}  // namespace fracheat
