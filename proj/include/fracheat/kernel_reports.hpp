#pragma once

#include <cstdint>

#include "fracheat/frac_kernel.hpp"
#include "fracheat/xi_profile.hpp"

namespace fracheat {

// Deterministic sampling plan for the empirical sup/inf reports: a
// low-discrepancy sweep (prefix-nested, so doubling the count refines the
// same sample) followed by local pattern-search refinement around the
// incumbent extremum.
struct SampleSpec {
  int count = 512;
  std::uint64_t seed = 1;
  double t_min = 1e-2, t_max = 10.0;
  double u_max = 50.0;  // r in units of t^{1/alpha}
  int refine_iters = 20;
  int clock_level = 0;  // 0: kernel default
  bool parallel = true;
};

namespace reports {

struct TwoSided {
  double c_low = 0.0;
  double c_high = 0.0;
};

// (inf, sup) of p^(a)(t, x, y) / xi(t, rho(x,y)) over the sample.
TwoSided two_sided(const FracKernel& k, const XiProfile& profile,
                   const SampleSpec& spec);

// least-squares slope of log p^(a)(t, r) vs log r over u in [u_lo, u_hi]
// (box geometry; the heavy tail makes this -(d + alpha))
double tail_slope(const FracKernel& k, double t, double u_lo, double u_hi,
                  int points);

// sup |grad^k p| t^{k/a} / xi over the sample; order 1 or 2 (Frobenius norm)
double grad_bound(const FracKernel& k, const XiProfile& profile, int order,
                  const SampleSpec& spec);

// eta(t; x, x'; y): two endpoint kernels plus the geodesic average
double eta(const FracKernel& k, double t, const Point& x, const Point& x2,
           const Point& y, int gl_order = 32);

// sup of |grad_x p(t,x,y) - grad_x p(t,x',y)| t^{b/a} /
//        (rho(x,x')^{b-1} eta(t;x,x';y))
double holder_grad(const FracKernel& k, double beta, const SampleSpec& spec);

// sup of [xi(t,r) ^ xi(s,u)] / xi(t+s, r+u)
double three_p_xi(const XiProfile& profile, const SampleSpec& spec);
// same for xi_m
double three_p_xi_m(const XiProfile& profile, double m, const SampleSpec& spec);
// kernel-level: sup p(t,x,z) p(s,z,y) / [p(t+s,x,y)(p(t,x,z) + p(s,z,y))]
double three_p_kernel(const FracKernel& k, const SampleSpec& spec);

}  // namespace reports

}  // namespace fracheat
