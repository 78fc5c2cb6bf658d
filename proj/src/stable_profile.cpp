#include "fracheat/stable_profile.hpp"

#include <cmath>
#include <stdexcept>

#include "fracheat/geometry.hpp"

namespace fracheat {

namespace {

// clock integral of the d-dim Gaussian radial kernel with first and second
// radial derivatives
void gauss_clock(const Subordinator& S, int d, double r, double& p,
                 double& dp, double& d2p) {
  auto fv = [&](double s) {
    const double e = -r * r * 0.25 / s;
    if (e < -745.0) return 0.0;
    return std::pow(4.0 * M_PI * s, -0.5 * d) * std::exp(e);
  };
  auto fd = [&](double s) { return fv(s) * (-r * 0.5 / s); };
  auto fdd = [&](double s) {
    return fv(s) * (r * r * 0.25 / (s * s) - 0.5 / s);
  };
  p = S.clock_integral(1.0, fv, 6).value;
  dp = S.clock_integral(1.0, fd, 6).value;
  d2p = S.clock_integral(1.0, fdd, 6).value;
}

}  // namespace

StableProfile::StableProfile(std::shared_ptr<const Subordinator> sub, int d)
    : sub_(std::move(sub)), d_(d) {
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("StableProfile: bad dimension");
  const double beta = sub_->sub_index();

  w_switch_ = 2.0;
  w_max_ = 1.0e4;

  const int n_lin = 600;
  {
    std::vector<double> p(n_lin), dp(n_lin), d2p(n_lin);
    const double dw = w_switch_ / (n_lin - 1);
    for (int i = 0; i < n_lin; ++i)
      gauss_clock(*sub_, d_, i * dw, p[i], dp[i], d2p[i]);
    lin_dp_ = UniformHermite(0.0, dw, dp, std::move(d2p));
    lin_p_ = UniformHermite(0.0, dw, std::move(p), std::move(dp));
  }
  const int n_log = 700;
  {
    std::vector<double> lp(n_log), dlp(n_log), ldp(n_log), dldp(n_log);
    const double l0 = std::log(w_switch_), l1 = std::log(w_max_);
    const double dl = (l1 - l0) / (n_log - 1);
    for (int i = 0; i < n_log; ++i) {
      const double w = std::exp(l0 + dl * i);
      double p, dp, d2p;
      gauss_clock(*sub_, d_, w, p, dp, d2p);
      lp[i] = std::log(std::max(p, 1e-300));
      dlp[i] = w * dp / p;
      ldp[i] = std::log(std::max(-dp, 1e-300));
      dldp[i] = w * d2p / dp;
    }
    log_p_ =
        UniformHermite(std::log(w_switch_), dl, std::move(lp), std::move(dlp));
    log_dp_ =
        UniformHermite(std::log(w_switch_), dl, std::move(ldp), std::move(dldp));
  }

  if (d_ == 1) {
    // one-sided tail mass M(w) = int_w^inf P, via M' = -P with M(inf) = 0;
    // anchored by M(0) = 1/2
    const int n_lin = 600, n_log = 700;
    const double dw = w_switch_ / (n_lin - 1);
    std::vector<double> m_lin(n_lin), dm_lin(n_lin);
    double acc = 0.5;
    m_lin[0] = 0.5;
    dm_lin[0] = -density(0.0);
    for (int i = 1; i < n_lin; ++i) {
      const double a = (i - 1) * dw, b = i * dw;
      acc -= dw / 6.0 *
             (density(a) + 4.0 * density(0.5 * (a + b)) + density(b));
      m_lin[i] = acc;
      dm_lin[i] = -density(b);
    }
    lin_m_ = UniformHermite(0.0, dw, std::move(m_lin), std::move(dm_lin));
    const double l0 = std::log(w_switch_), l1 = std::log(w_max_);
    const double dl = (l1 - l0) / (n_log - 1);
    std::vector<double> m_log(n_log), dm_log(n_log);
    m_log[0] = acc;
    dm_log[0] = -density(w_switch_) * w_switch_;  // d/d(log w)
    for (int i = 1; i < n_log; ++i) {
      const double ua = l0 + dl * (i - 1), ub = l0 + dl * i;
      auto fu = [&](double u) {
        const double w = std::exp(u);
        return density(w) * w;
      };
      acc -= dl / 6.0 * (fu(ua) + 4.0 * fu(0.5 * (ua + ub)) + fu(ub));
      m_log[i] = acc;
      dm_log[i] = -fu(ub);
    }
    log_m_ = UniformHermite(l0, dl, std::move(m_log), std::move(dm_log));
  }

  // subordinating the convergent series of the standardized stable law
  // termwise gives P(w) ~ sum_k coef_k w^{-(d+2k beta)}
  tail_.resize(4);
  for (int k = 1; k <= 4; ++k) {
    const double lg = std::lgamma(k * beta + 1.0) - std::lgamma(k + 1.0) +
                      std::lgamma(0.5 * d + k * beta);
    tail_[k - 1] = ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(lg) *
                   std::sin(M_PI * k * beta) * std::pow(4.0, k * beta) /
                   std::pow(M_PI, 0.5 * d + 1.0);
  }
}

double StableProfile::density(double w) const {
  w = std::abs(w);
  if (w <= w_switch_) return lin_p_(w);
  if (w <= w_max_) return std::exp(log_p_(std::log(w)));
  double s = 0.0;
  const double beta = sub_->sub_index();
  for (std::size_t k = 1; k <= tail_.size(); ++k)
    s += tail_[k - 1] * std::pow(w, -(d_ + 2.0 * k * beta));
  return std::max(s, 0.0);
}

double StableProfile::radial_deriv(double w) const {
  const double a = std::abs(w);
  double v;
  if (a <= w_switch_) {
    v = lin_dp_(a);
  } else if (a <= w_max_) {
    v = -std::exp(log_dp_(std::log(a)));
  } else {
    double s = 0.0;
    const double beta = sub_->sub_index();
    for (std::size_t k = 1; k <= tail_.size(); ++k)
      s += tail_[k - 1] * (-(d_ + 2.0 * k * beta)) *
           std::pow(a, -(d_ + 2.0 * k * beta) - 1.0);
    v = s;
  }
  return v;
}

double StableProfile::mass_beyond(double w) const {
  if (d_ != 1) throw std::logic_error("mass_beyond: d = 1 only");
  w = std::abs(w);
  if (w <= w_switch_) return lin_m_(w);
  if (w <= w_max_) return log_m_(std::log(w));
  const double beta = sub_->sub_index();
  double s = 0.0;
  for (std::size_t k = 1; k <= tail_.size(); ++k) {
    const double expo = 2.0 * k * beta;  // int of w^{-(1+2kb)}
    s += tail_[k - 1] * std::pow(w, -expo) / expo;
  }
  return std::max(s, 0.0);
}

double StableProfile::torus_value(double t, const double* delta, double L,
                                  int images) const {
  const double s = std::pow(t, -1.0 / alpha());
  double sum = 0.0;
  if (d_ == 1) {
    for (int k = -images; k <= images; ++k) {
      const double r = std::abs(delta[0] + k * L);
      sum += density(r * s);
    }
  } else if (d_ == 2) {
    for (int k0 = -images; k0 <= images; ++k0)
      for (int k1 = -images; k1 <= images; ++k1) {
        const double u0 = delta[0] + k0 * L, u1 = delta[1] + k1 * L;
        sum += density(std::sqrt(u0 * u0 + u1 * u1) * s);
      }
  } else {
    throw std::logic_error("torus_value: d > 2 not supported");
  }
  return std::pow(s, d_) * sum;
}

}  // namespace fracheat
