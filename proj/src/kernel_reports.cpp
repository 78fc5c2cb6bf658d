#include "fracheat/kernel_reports.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fracheat/kato.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/rng.hpp"

namespace fracheat {
namespace reports {

namespace {

double lerp(double a, double b, double u) { return a + (b - a) * u; }

double log_lerp(double a, double b, double u) {
  return a * std::pow(b / a, u);
}

// generic pattern-search refinement of f over the unit cube (dims <= 6)
template <class F>
double refine_max(F&& f, std::array<double, 6> u, int dims, int iters,
                  double incumbent) {
  double step = 0.25;
  for (int it = 0; it < iters; ++it) {
    bool moved = false;
    for (int dcoord = 0; dcoord < dims; ++dcoord) {
      for (double sgn : {1.0, -1.0}) {
        auto v = u;
        v[dcoord] = std::clamp(v[dcoord] + sgn * step, 0.0, 1.0);
        const double val = f(v);
        if (val > incumbent) {
          incumbent = val;
          u = v;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
    if (step < 1e-6) break;
  }
  return incumbent;
}

// sample (t, r) from the unit square per the spec ranges; r capped by the
// domain diameter on the torus
struct TRMap {
  const Domain* dom;
  double alpha;
  const SampleSpec* spec;

  void map(double u0, double u1, double& t, double& r) const {
    t = log_lerp(spec->t_min, spec->t_max, u0);
    const double rmax = dom->kind == DomainKind::torus
                            ? dom->max_distance()
                            : spec->u_max * std::pow(t, 1.0 / alpha);
    r = lerp(0.0, rmax, u1);
  }
};

}  // namespace

TwoSided two_sided(const FracKernel& k, const XiProfile& profile,
                   const SampleSpec& spec) {
  const Domain& dom = k.domain();
  TRMap map{&dom, k.alpha(), &spec};
  auto ratio = [&](const std::array<double, 6>& u) {
    double t, r;
    map.map(u[0], u[1], t, r);
    Point x{}, y = make_point(r);
    const double v =
        k.eval(t, x, dom.wrap(y), 0, spec.clock_level).value;
    return v / profile.xi(t, dom.distance(x, dom.wrap(y)));
  };

  LowDiscrepancy ld(2, spec.seed);
  std::vector<std::array<double, 6>> us(spec.count);
  for (auto& u : us) u = ld.next();
  std::vector<double> vals(spec.count);
  parallel_for(
      spec.count, [&](std::size_t i) { vals[i] = ratio(us[i]); },
      spec.parallel);

  TwoSided out{vals[0], vals[0]};
  std::array<double, 6> arg_lo = us[0], arg_hi = us[0];
  for (int i = 0; i < spec.count; ++i) {
    if (vals[i] < out.c_low) {
      out.c_low = vals[i];
      arg_lo = us[i];
    }
    if (vals[i] > out.c_high) {
      out.c_high = vals[i];
      arg_hi = us[i];
    }
  }
  out.c_high = refine_max(ratio, arg_hi, 2, spec.refine_iters, out.c_high);
  auto neg = [&](const std::array<double, 6>& u) { return -ratio(u); };
  out.c_low = -refine_max(neg, arg_lo, 2, spec.refine_iters, -out.c_low);
  return out;
}

double tail_slope(const FracKernel& k, double t, double u_lo, double u_hi,
                  int points) {
  const double scale = std::pow(t, 1.0 / k.alpha());
  std::vector<double> lr(points), lp(points);
  for (int i = 0; i < points; ++i) {
    const double r = scale * log_lerp(u_lo, u_hi, double(i) / (points - 1));
    Point x{}, y = make_point(r);
    lr[i] = r;
    lp[i] = k.eval(t, x, y, 0, 6).value;
  }
  double slope, r2;
  fit_loglog(lr, lp, points, slope, r2);
  return slope;
}

double grad_bound(const FracKernel& k, const XiProfile& profile, int order,
                  const SampleSpec& spec) {
  const Domain& dom = k.domain();
  const int d = dom.d;
  TRMap map{&dom, k.alpha(), &spec};
  auto ratio = [&](const std::array<double, 6>& u) {
    double t, r;
    map.map(u[0], u[1], t, r);
    Point x{}, y = dom.wrap(make_point(r));
    const auto ev = k.eval(t, x, y, order == 1 ? 1 : 2, spec.clock_level);
    double mag = 0.0;
    if (order == 1) {
      for (int i = 0; i < d; ++i) mag += ev.grad[i] * ev.grad[i];
    } else {
      for (int i = 0; i < d * d; ++i) mag += ev.hess[i] * ev.hess[i];
    }
    mag = std::sqrt(mag);
    return mag * std::pow(t, order / k.alpha()) /
           profile.xi(t, dom.distance(x, y));
  };
  LowDiscrepancy ld(2, spec.seed);
  std::vector<std::array<double, 6>> us(spec.count);
  for (auto& u : us) u = ld.next();
  std::vector<double> vals(spec.count);
  parallel_for(
      spec.count, [&](std::size_t i) { vals[i] = ratio(us[i]); },
      spec.parallel);
  double best = 0.0;
  std::array<double, 6> arg{};
  for (int i = 0; i < spec.count; ++i)
    if (vals[i] > best) {
      best = vals[i];
      arg = us[i];
    }
  return refine_max(ratio, arg, 2, spec.refine_iters, best);
}

double eta(const FracKernel& k, double t, const Point& x, const Point& x2,
           const Point& y, int gl_order) {
  const Domain& dom = k.domain();
  const double pa = k.value(t, x, y);
  const double pb = k.value(t, x2, y);
  const GaussLegendre& rule = GaussLegendre::order(gl_order);
  const double avg = rule.integrate(
      [&](double th) {
        return k.value(t, dom.geodesic_point(x, x2, th), y);
      },
      0.0, 1.0);
  return pa + pb + avg;
}

double holder_grad(const FracKernel& k, double beta, const SampleSpec& spec) {
  const Domain& dom = k.domain();
  const int d = dom.d;
  const double alpha = k.alpha();
  // sample (t, x, x', y) with x' = x + offset; coordinates from the cube
  auto ratio = [&](const std::array<double, 6>& u) {
    const double t = log_lerp(spec.t_min, spec.t_max, u[0]);
    const double span = dom.kind == DomainKind::torus
                            ? dom.extent
                            : 2.0 * std::pow(t, 1.0 / alpha) * 4.0;
    Point x{}, x2{}, y{};
    for (int i = 0; i < d; ++i) {
      x[i] = lerp(-0.5, 0.5, u[1 + i]) * span;
      y[i] = lerp(-0.5, 0.5, u[1 + d + i]) * span;
    }
    // x' offset spans several decades so both near and far pairs appear
    const double off = std::pow(t, 1.0 / alpha) *
                       std::pow(10.0, lerp(-2.0, 0.5, u[1 + 2 * d]));
    x2 = x;
    x2[0] += off;
    x = dom.wrap(x);
    x2 = dom.wrap(x2);
    y = dom.wrap(y);
    const double rho = dom.distance(x, x2);
    if (!(rho > 0.0)) return 0.0;
    const auto ex = k.eval(t, x, y, 1, spec.clock_level);
    const auto ex2 = k.eval(t, x2, y, 1, spec.clock_level);
    double dg = 0.0;
    for (int i = 0; i < d; ++i) {
      const double q = ex.grad[i] - ex2.grad[i];
      dg += q * q;
    }
    dg = std::sqrt(dg);
    const double et = eta(k, t, x, x2, y, 16);
    return dg * std::pow(t, beta / alpha) /
           (std::pow(rho, beta - 1.0) * et);
  };
  const int dims = 2 + 2 * d;
  LowDiscrepancy ld(dims, spec.seed);
  std::vector<std::array<double, 6>> us(spec.count);
  for (auto& u : us) u = ld.next();
  std::vector<double> vals(spec.count);
  parallel_for(
      spec.count, [&](std::size_t i) { vals[i] = ratio(us[i]); },
      spec.parallel);
  double best = 0.0;
  std::array<double, 6> arg{};
  for (int i = 0; i < spec.count; ++i)
    if (vals[i] > best) {
      best = vals[i];
      arg = us[i];
    }
  return refine_max(ratio, arg, dims, spec.refine_iters, best);
}

namespace {

template <class XiFun>
double three_p_generic(XiFun&& xi, const SampleSpec& spec, double alpha) {
  auto ratio = [&](const std::array<double, 6>& u) {
    const double t = log_lerp(spec.t_min, spec.t_max, u[0]);
    const double s = log_lerp(spec.t_min, spec.t_max, u[1]);
    // r, u sampled in stable units of their own time variable; the extremal
    // manifold r ~ t^{1/a} sits in the middle of this range
    const double r = lerp(0.0, spec.u_max, u[2]) * std::pow(t, 1.0 / alpha);
    const double w = lerp(0.0, spec.u_max, u[3]) * std::pow(s, 1.0 / alpha);
    const double num = std::min(xi(t, r), xi(s, w));
    const double den = xi(t + s, r + w);
    return den > 0.0 ? num / den : 0.0;
  };
  LowDiscrepancy ld(4, spec.seed);
  double best = 0.0;
  std::array<double, 6> arg{};
  for (int i = 0; i < spec.count; ++i) {
    const auto u = ld.next();
    const double v = ratio(u);
    if (v > best) {
      best = v;
      arg = u;
    }
  }
  // structured sweep of the symmetric manifold t = s, r = u(= c t^{1/a})
  for (int i = 0; i < 64; ++i) {
    std::array<double, 6> u{};
    u[0] = u[1] = double(i) / 63.0;
    for (int j = 0; j < 16; ++j) {
      u[2] = u[3] = double(j) / 15.0 * 0.25;
      const double v = ratio(u);
      if (v > best) {
        best = v;
        arg = u;
      }
    }
  }
  return refine_max(ratio, arg, 4, spec.refine_iters, best);
}

}  // namespace

double three_p_xi(const XiProfile& profile, const SampleSpec& spec) {
  return three_p_generic(
      [&](double t, double r) { return profile.xi(t, r); }, spec,
      profile.alpha);
}

double three_p_xi_m(const XiProfile& profile, double m,
                    const SampleSpec& spec) {
  return three_p_generic(
      [&](double t, double r) { return profile.xi_m(m, t, r); }, spec,
      profile.alpha);
}

double three_p_kernel(const FracKernel& k, const SampleSpec& spec) {
  const Domain& dom = k.domain();
  const double alpha = k.alpha();
  auto ratio = [&](const std::array<double, 6>& u) {
    const double t = log_lerp(spec.t_min, spec.t_max, u[0]);
    const double s = log_lerp(spec.t_min, spec.t_max, u[1]);
    const double span = dom.kind == DomainKind::torus
                            ? dom.extent
                            : spec.u_max *
                                  std::pow(std::max(t, s), 1.0 / alpha);
    Point x{}, z = make_point(lerp(-0.5, 0.5, u[2]) * span),
          y = make_point(lerp(-0.5, 0.5, u[3]) * span);
    z = dom.wrap(z);
    y = dom.wrap(y);
    const double ptxz = k.eval(t, x, z, 0, spec.clock_level).value;
    const double pszy = k.eval(s, z, y, 0, spec.clock_level).value;
    const double pts = k.eval(t + s, x, y, 0, spec.clock_level).value;
    const double den = pts * (ptxz + pszy);
    return den > 0.0 ? ptxz * pszy / den : 0.0;
  };
  LowDiscrepancy ld(4, spec.seed);
  std::vector<std::array<double, 6>> us(spec.count);
  for (auto& u : us) u = ld.next();
  std::vector<double> vals(spec.count);
  parallel_for(
      spec.count, [&](std::size_t i) { vals[i] = ratio(us[i]); },
      spec.parallel);
  double best = 0.0;
  std::array<double, 6> arg{};
  for (int i = 0; i < spec.count; ++i)
    if (vals[i] > best) {
      best = vals[i];
      arg = us[i];
    }
  return refine_max(ratio, arg, 4, spec.refine_iters, best);
}

}  // namespace reports
}  // namespace fracheat
