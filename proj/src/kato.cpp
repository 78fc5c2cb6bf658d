#include "fracheat/kato.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fracheat/quadrature.hpp"

namespace fracheat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PowerSing {
  double coord;
  double theta;
};

// 1D integral of h over [lo, hi] split at kinks, with power-substitution at
// panel endpoints that carry an |y - coord|^{-theta} singularity of h.
double panel_integrate_1d(const std::function<double(double)>& h, double lo,
                          double hi, std::vector<double> kinks,
                          const std::vector<PowerSing>& sings, int gl) {
  if (!(hi > lo)) return 0.0;
  for (const auto& s : sings) kinks.push_back(s.coord);
  kinks.push_back(lo);
  kinks.push_back(hi);
  std::sort(kinks.begin(), kinks.end());
  kinks.erase(std::unique(kinks.begin(), kinks.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-14; }),
              kinks.end());
  const GaussLegendre& rule = GaussLegendre::order(gl);
  auto theta_at = [&](double c) {
    for (const auto& s : sings)
      if (std::abs(s.coord - c) < 1e-13) return s.theta;
    return 0.0;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
    double a = std::max(lo, kinks[i]), b = std::min(hi, kinks[i + 1]);
    if (!(b > a)) continue;
    const double ta = theta_at(a), tb = theta_at(b);
    if (ta > 0.0 && tb > 0.0) {
      // split; each half sees one singular endpoint
      const double m = 0.5 * (a + b);
      kinks.insert(kinks.begin() + i + 1, m);
      --i;
      continue;
    }
    if (ta > 0.0 && ta < 1.0) {
      const double p = 1.0 / (1.0 - ta);
      const double len = b - a;
      total += rule.integrate(
          [&](double u) {
            const double y = a + len * std::pow(u, p);
            return h(y) * len * p * std::pow(u, p - 1.0);
          },
          0.0, 1.0);
    } else if (tb > 0.0 && tb < 1.0) {
      const double p = 1.0 / (1.0 - tb);
      const double len = b - a;
      total += rule.integrate(
          [&](double u) {
            const double y = b - len * std::pow(u, p);
            return h(y) * len * p * std::pow(u, p - 1.0);
          },
          0.0, 1.0);
    } else {
      total += rule.integrate(h, a, b);
    }
  }
  return total;
}

// surface area of the unit sphere in R^d
double sphere_area(int d) { return d * unit_ball_volume(d); }

// log-spaced ladder from r0 outward to W on both sides of x: power-law
// integrands spanning many decades need geometric panel subdivision
void add_log_ladder(std::vector<double>& kinks, double x, double r0, double W) {
  for (double r = 4.0 * r0; r < W; r *= 4.0) {
    kinks.push_back(x - r);
    kinks.push_back(x + r);
  }
}

double far_window_of(const Domain& dom, const KatoQuad& q) {
  return q.far_window > 0.0 ? q.far_window : dom.extent;
}

// combined spatial singularity exponent at the f-singularity; the integral
// against a bounded kernel is finite iff theta < d
bool spatial_integrable(const SpatialInfo& info, int d) {
  return info.sing_theta < static_cast<double>(d);
}

}  // namespace

KatoIntegrand KatoIntegrand::from_scalar(const Domain& dom,
                                         const ScalarField& f) {
  KatoIntegrand k;
  k.abs_value = [dom, f](double t, const Point& y) {
    return std::abs(f(dom, t, y));
  };
  k.info = f.spatial_info(dom);
  k.tprofs = {f.time_profile()};
  k.time_independent = f.time_independent();
  return k;
}

KatoIntegrand KatoIntegrand::from_drift_magnitude(const Domain& dom,
                                                  const DriftField& b) {
  KatoIntegrand k;
  k.abs_value = [dom, b](double t, const Point& y) {
    return b.magnitude(dom, t, y);
  };
  k.info = b.magnitude_info(dom);
  k.tprofs = {b.time_profile()};
  k.time_independent = b.time_independent();
  return k;
}

KatoIntegrand KatoIntegrand::from_tilde_c(const Domain& dom,
                                          const ScalarField& c,
                                          const DriftField& b) {
  KatoIntegrand k;
  // the measure divergence of the estimates is minus the ordinary one
  k.abs_value = [dom, c, b](double t, const Point& y) {
    return std::abs(c(dom, t, y) - b.divergence(dom, t, y));
  };
  SpatialInfo ic = c.spatial_info(dom);
  SpatialInfo ib = b.magnitude_info(dom);
  k.info = ic;
  for (double bp : ib.breakpoints) k.info.breakpoints.push_back(bp);
  k.info.far_coeff = ic.far_coeff + ib.far_coeff;
  k.info.far_theta = std::min(ic.far_theta, ib.far_theta);
  k.tprofs = {c.time_profile(), b.time_profile()};
  k.time_independent = c.time_independent() && b.time_independent();
  return k;
}

std::vector<double> KatoIntegrand::sup_times(double eps) const {
  std::vector<double> t;
  for (const auto& p : tprofs) {
    auto c = p.sup_candidates(eps);
    t.insert(t.end(), c.begin(), c.end());
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

double xi_spatial_integral(const Domain& dom, const XiProfile& profile,
                           const KatoIntegrand& f, double s, double t0,
                           const Point& x, const KatoQuad& q) {
  if (!(s > 0.0)) throw std::invalid_argument("xi_spatial_integral: s <= 0");
  const double alpha = profile.alpha;
  const double kink_r = std::pow(s, 1.0 / alpha);
  if (dom.d == 1) {
    double lo, hi;
    std::vector<double> kinks;
    std::vector<PowerSing> sings;
    auto h = [&](double y) {
      Point py = make_point(y);
      return profile.xi(s, dom.distance(x, py)) * f.abs_value(t0, py);
    };
    if (dom.kind == DomainKind::torus) {
      const double L = dom.extent;
      lo = x[0] - 0.5 * L;
      hi = x[0] + 0.5 * L;
      auto to_window = [&](double c) {
        double r = c - L * std::floor((c - lo) / L);
        return r;
      };
      kinks = {x[0], x[0] - kink_r, x[0] + kink_r};
      add_log_ladder(kinks, x[0], kink_r, 0.5 * L);
      for (double bp : f.info.breakpoints) kinks.push_back(to_window(bp));
      if (f.info.sing_theta > 0.0) {
        if (f.info.sing_theta >= 1.0) return kInf;
        sings.push_back({to_window(f.info.sing_coord), f.info.sing_theta});
      }
      return panel_integrate_1d(h, lo, hi, kinks, sings, q.gl_order);
    }
    // box: window plus analytic far tail
    double W = std::max(far_window_of(dom, q), kink_r * 1.5);
    lo = x[0] - W;
    hi = x[0] + W;
    kinks = {x[0], x[0] - kink_r, x[0] + kink_r};
    add_log_ladder(kinks, x[0], kink_r, W);
    for (double bp : f.info.breakpoints) kinks.push_back(bp);
    if (f.info.sing_theta > 0.0) {
      if (f.info.sing_theta >= 1.0) return kInf;
      sings.push_back({f.info.sing_coord, f.info.sing_theta});
    }
    double v = panel_integrate_1d(h, lo, hi, kinks, sings, q.gl_order);
    if (f.info.far_coeff > 0.0) {
      const double th = f.info.far_theta;
      v += 2.0 * f.info.far_coeff * s * std::pow(W, -(alpha + th)) /
           (alpha + th);
    }
    return v;
  }
  // d >= 2: tensor Gauss-Legendre panels per axis, split at x +- kink_r,
  // plus the analytic radial far tail on the box.
  if (f.info.sing_theta >= static_cast<double>(dom.d)) return kInf;
  const double W = dom.kind == DomainKind::torus ? 0.5 * dom.extent
                                                 : far_window_of(dom, q);
  const GaussLegendre& rule = GaussLegendre::order(12);
  std::vector<double> cuts = {-W, W};
  if (kink_r < W) {
    cuts.push_back(-kink_r);
    cuts.push_back(kink_r);
    add_log_ladder(cuts, 0.0, kink_r, W);
  }
  std::sort(cuts.begin(), cuts.end());
  // per-axis nodes/weights
  std::vector<double> nodes, weights;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    for (std::size_t g = 0; g < rule.nodes().size(); ++g) {
      nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes()[g]);
      weights.push_back(0.5 * (b - a) * rule.weights()[g]);
    }
  }
  double v = 0.0;
  if (dom.d == 2) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        Point y = make_point(x[0] + nodes[i], x[1] + nodes[j]);
        y = dom.wrap(y);
        v += weights[i] * weights[j] *
             profile.xi(s, dom.distance(x, y)) * f.abs_value(t0, y);
      }
  } else {
    throw std::logic_error("xi_spatial_integral: d = 3 not supported");
  }
  if (dom.kind == DomainKind::euclidean_box && f.info.far_coeff > 0.0) {
    const double th = f.info.far_theta;
    v += sphere_area(dom.d) * f.info.far_coeff * s *
         std::pow(W, -(alpha + th)) / (alpha + th);
  }
  return v;
}

double k_functional(const Domain& dom, const XiProfile& profile,
                    const KatoIntegrand& f, double gamma, double beta,
                    double eps, SignMode sign, const KatoQuad& q) {
  const double alpha = profile.alpha;
  if (gamma >= alpha || beta >= alpha)
    throw std::invalid_argument("k_functional: gamma or beta >= alpha");
  if (gamma < 0.0 || beta < 0.0)
    throw std::invalid_argument("k_functional: negative exponent");
  if (!(eps > 0.0)) throw std::invalid_argument("k_functional: eps <= 0");
  if (!spatial_integrable(f.info, dom.d)) return kInf;

  const GaussLegendre& rule = GaussLegendre::order(q.gl_order);

  // x sweep along axis 0: uniform positions plus the structural points
  std::vector<double> xs;
  const double span = dom.kind == DomainKind::torus ? dom.extent : dom.extent;
  for (int i = 0; i < q.x_samples; ++i) {
    const double u = (q.x_samples == 1) ? 0.0
                                        : -0.5 + static_cast<double>(i) /
                                                     (q.x_samples - 1);
    xs.push_back(dom.kind == DomainKind::torus ? (u + 0.5) * span : u * span);
  }
  xs.push_back(f.info.far_center[0]);
  for (double bp : f.info.breakpoints) xs.push_back(bp);

  const auto t_cands = f.time_independent ? std::vector<double>{2.0 * eps}
                                          : f.sup_times(eps);

  double best = 0.0;
  const double pg = alpha / (alpha - gamma);
  const double pb = alpha / (alpha - beta);
  for (double x0 : xs) {
    Point x = dom.wrap(make_point(x0));
    for (double t : t_cands) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        if (sign == SignMode::plus && sgn == 1) continue;
        if (sign == SignMode::minus && sgn == 0) continue;
        auto integrand_at = [&](double s) {
          const double teff = (sgn == 0) ? t + s : t - s;
          return xi_spatial_integral(dom, profile, f, s, teff, x, q);
        };
        // left half: s = (eps/2) u^pg removes s^{-gamma/alpha} exactly
        const double half = 0.5 * eps;
        double left = rule.integrate(
            [&](double u) {
              if (u <= 0.0) return 0.0;
              const double s = half * std::pow(u, pg);
              const double jac =
                  std::pow(half, 1.0 - gamma / alpha) * pg;  // du measure
              return integrand_at(s) * jac *
                     std::pow(eps - s, -beta / alpha);
            },
            0.0, 1.0);
        // right half: eps - s = (eps/2) v^pb
        double right = rule.integrate(
            [&](double v) {
              if (v <= 0.0) return 0.0;
              const double em_s = half * std::pow(v, pb);
              const double s = eps - em_s;
              const double jac = std::pow(half, 1.0 - beta / alpha) * pb;
              return integrand_at(s) * jac * std::pow(s, -gamma / alpha);
            },
            0.0, 1.0);
        const double val = std::pow(eps, beta / alpha) * (left + right);
        if (std::isinf(val)) return kInf;
        best = std::max(best, val);
      }
    }
  }
  return best;
}

void fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                int last_n, double& slope, double& r2) {
  const int n = static_cast<int>(x.size());
  const int k0 = std::max(0, n - last_n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int m = 0;
  for (int i = k0; i < n; ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
    ++m;
  }
  if (m < 2) {
    slope = 0.0;
    r2 = 0.0;
    return;
  }
  const double den = m * sxx - sx * sx;
  slope = (m * sxy - sx * sy) / den;
  const double ss_tot = syy - sy * sy / m;
  const double ss_res = ss_tot - slope * (sxy - sx * sy / m);
  r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

namespace {

DecayTable decide(std::vector<double> eps, std::vector<double> val) {
  DecayTable t;
  t.eps = std::move(eps);
  t.value = std::move(val);
  double vmax = 0.0;
  bool any_inf = false;
  for (double v : t.value) {
    if (std::isinf(v)) any_inf = true;
    vmax = std::max(vmax, v);
  }
  if (any_inf) {
    t.member = false;
    return t;
  }
  if (vmax < 1e-300) {  // identically zero functional
    t.member = true;
    t.fitted_rate = std::numeric_limits<double>::max();
    t.r2 = 1.0;
    return t;
  }
  fit_loglog(t.eps, t.value, 6, t.fitted_rate, t.r2);
  t.member = (t.fitted_rate > 0.05) && (t.r2 >= 0.99);
  return t;
}

}  // namespace

DecayTable class_membership(const Domain& dom, const XiProfile& profile,
                            const KatoIntegrand& f, double gamma, double beta,
                            const std::vector<double>& eps_seq, SignMode sign,
                            const KatoQuad& q) {
  std::vector<double> vals;
  vals.reserve(eps_seq.size());
  for (double e : eps_seq)
    vals.push_back(k_functional(dom, profile, f, gamma, beta, e, sign, q));
  return decide(eps_seq, vals);
}

DecayTable kato_class_test(const Domain& dom, const XiProfile& profile,
                           const KatoIntegrand& f,
                           const std::vector<double>& eps_seq,
                           const KatoQuad& q) {
  const double alpha = profile.alpha;
  const int d = dom.d;
  // kernel power at rho = 0 is rho^{alpha - d - 1}; combined with the f
  // singularity the integral is finite iff theta_f + d + 1 - alpha < d
  const bool integrable = f.info.sing_theta + 1.0 - alpha < 0.0 ||
                          f.info.sing_theta == 0.0;
  // finite-mass requirement mu(|f|) < inf
  const bool mass_ok =
      !dom.finite_mass() || f.info.sing_theta < static_cast<double>(d);

  std::vector<double> vals;
  for (double eps : eps_seq) {
    if (!integrable || !mass_ok) {
      vals.push_back(kInf);
      continue;
    }
    const double kink_r = std::pow(eps, 1.0 / alpha);
    double best = 0.0;
    std::vector<double> xs;
    for (int i = 0; i < q.x_samples; ++i) {
      const double u = (q.x_samples == 1)
                           ? 0.0
                           : -0.5 + static_cast<double>(i) / (q.x_samples - 1);
      xs.push_back(dom.kind == DomainKind::torus ? (u + 0.5) * dom.extent
                                                 : u * dom.extent);
    }
    xs.push_back(f.info.far_center[0]);
    for (double x0 : xs) {
      Point x = dom.wrap(make_point(x0));
      double v = 0.0;
      if (d == 1) {
        auto h = [&](double y) {
          Point py = make_point(y);
          const double rho = dom.distance(x, py);
          if (rho <= 0.0) return 0.0;
          return f.abs_value(0.0, py) * std::min(eps, std::pow(rho, alpha)) /
                 std::pow(rho, d + 1.0);
        };
        double lo, hi;
        std::vector<double> kinks = {x[0] - kink_r, x[0] + kink_r};
        const double ladder_w = dom.kind == DomainKind::torus
                                    ? 0.5 * dom.extent
                                    : far_window_of(dom, q);
        add_log_ladder(kinks, x[0], std::max(kink_r, 1e-6), ladder_w);
        std::vector<PowerSing> sings;
        double th_at_x = d + 1.0 - alpha;  // kernel exponent at rho=0
        if (f.info.sing_theta > 0.0 &&
            std::abs(f.info.sing_coord - x[0]) < 1e-13)
          th_at_x += f.info.sing_theta;
        sings.push_back({x[0], th_at_x});
        if (f.info.sing_theta > 0.0 &&
            std::abs(f.info.sing_coord - x[0]) >= 1e-13)
          sings.push_back({f.info.sing_coord, f.info.sing_theta});
        if (dom.kind == DomainKind::torus) {
          lo = x[0] - 0.5 * dom.extent;
          hi = x[0] + 0.5 * dom.extent;
          for (double bp : f.info.breakpoints) {
            double r = bp - dom.extent * std::floor((bp - lo) / dom.extent);
            kinks.push_back(r);
          }
        } else {
          const double W = far_window_of(dom, q);
          lo = x[0] - W;
          hi = x[0] + W;
          for (double bp : f.info.breakpoints) kinks.push_back(bp);
          if (f.info.far_coeff > 0.0) {
            const double th = f.info.far_theta;
            v += 2.0 * f.info.far_coeff * eps * std::pow(W, -(1.0 + th)) /
                 (1.0 + th);
          }
        }
        v += panel_integrate_1d(h, lo, hi, kinks, sings, q.gl_order);
      } else {
        throw std::logic_error("kato_class_test: only d = 1 implemented");
      }
      best = std::max(best, v);
    }
    vals.push_back(best);
  }
  return decide(eps_seq, vals);
}

InclusionReport kato_inclusion_check(const Domain& dom,
                                     const XiProfile& profile,
                                     const KatoIntegrand& f, double beta,
                                     const std::vector<double>& eps_seq,
                                     const KatoQuad& q) {
  InclusionReport rep;
  rep.kato = kato_class_test(dom, profile, f, eps_seq, q);
  rep.k1b = class_membership(dom, profile, f, 1.0, beta, eps_seq,
                             SignMode::max_of_both, q);
  if (!rep.kato.member) {
    rep.vacuous = true;
    rep.implication_ok = true;
  } else {
    rep.implication_ok = rep.k1b.member;
  }
  return rep;
}

LqLpReport lqlp_predicate(double p, double q, double gamma, double beta, int d,
                          double alpha) {
  if (p < 1.0 || q < 1.0)
    throw std::invalid_argument("lqlp_predicate: p, q must be >= 1");
  LqLpReport r;
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  r.margin1 = (alpha - gamma) - (d * inv_p + alpha * inv_q);
  r.margin2 = std::isinf(q) ? kInf : q - alpha / (alpha - beta);
  r.satisfied = r.margin1 > 0.0 && r.margin2 > 0.0;
  const double ps = std::isinf(p) ? 1.0 : p / (p - 1.0);
  const double qs = std::isinf(q) ? 1.0 : q / (q - 1.0);
  const double theta = d * qs / (alpha * ps) - d * qs / alpha - gamma * qs / alpha;
  r.proof_rate = (1.0 + theta) / qs;
  return r;
}

double seminorm(const Domain& dom, const XiProfile& profile,
                const DriftField& b, const ScalarField& c, double r,
                SeminormVariant variant, double beta, const KatoQuad& q) {
  if (!(r > 0.0)) throw std::invalid_argument("seminorm: r <= 0");
  double g = 1.0, be = 1.0;
  if (variant == SeminormVariant::ell_beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("seminorm: beta required");
    g = be = beta;
  }
  const KatoIntegrand fb = KatoIntegrand::from_drift_magnitude(dom, b);
  const KatoIntegrand fc = (variant == SeminormVariant::ell_tilde)
                               ? KatoIntegrand::from_tilde_c(dom, c, b)
                               : KatoIntegrand::from_scalar(dom, c);
  double best = 0.0;
  for (int j = 0; j < 7; ++j) {
    const double eps = r * std::pow(0.5, j);
    double v = 0.0;
    if (!b.is_zero())
      v += k_functional(dom, profile, fb, g, be, eps, SignMode::max_of_both, q);
    v += k_functional(dom, profile, fc, g, be, eps, SignMode::max_of_both, q);
    best = std::max(best, v);
  }
  return best;
}

}  // namespace fracheat
