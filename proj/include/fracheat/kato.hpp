#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fracheat/functions.hpp"
#include "fracheat/geometry.hpp"
#include "fracheat/xi_profile.hpp"

namespace fracheat {

enum class SignMode { plus, minus, max_of_both };

// A scalar integrand |f| packaged with the metadata the singularity-aware
// integrators need. Wraps built-in fields and simple combinations of them
// (|c + div b| for the rewritten iteration).
struct KatoIntegrand {
  std::function<double(double, const Point&)> abs_value;  // |f(t, y)|
  SpatialInfo info;
  std::vector<TimeProfile> tprofs;
  bool time_independent = true;

  static KatoIntegrand from_scalar(const Domain& dom, const ScalarField& f);
  static KatoIntegrand from_drift_magnitude(const Domain& dom,
                                            const DriftField& b);
  // |c + div_mu b|
  static KatoIntegrand from_tilde_c(const Domain& dom, const ScalarField& c,
                                    const DriftField& b);

  std::vector<double> sup_times(double eps) const;
};

// Quadrature controls for the functionals.
struct KatoQuad {
  int gl_order = 24;        // per spatial panel / time half
  int x_samples = 33;       // positions of x for the sup (axis sweep)
  double far_window = 0.0;  // y-window half-width on the box; 0: use extent
  int grid_n = 48;          // tensor quadrature nodes per axis for d >= 2
};

// Spatial layer: int over M of xi(s, rho(x,y)) |f(t0,y)| mu(dy), with the
// analytic far-field tail on the box. Exact panel splitting in d = 1;
// tensor-panel quadrature in d = 2.
double xi_spatial_integral(const Domain& dom, const XiProfile& profile,
                           const KatoIntegrand& f, double s, double t0,
                           const Point& x, const KatoQuad& q);

// K^{gamma,beta}_{alpha,f}(eps). Returns +inf when the metadata shows a
// non-integrable spatial singularity. Throws if gamma or beta >= alpha.
double k_functional(const Domain& dom, const XiProfile& profile,
                    const KatoIntegrand& f, double gamma, double beta,
                    double eps, SignMode sign = SignMode::max_of_both,
                    const KatoQuad& q = {});

struct DecayTable {
  std::vector<double> eps;
  std::vector<double> value;
  double fitted_rate = 0.0;  // log-log slope over the last points
  double r2 = 0.0;
  bool member = false;
};

// Membership in K^{gamma,beta}: K(eps) decays with fitted positive rate.
DecayTable class_membership(const Domain& dom, const XiProfile& profile,
                            const KatoIntegrand& f, double gamma, double beta,
                            const std::vector<double>& eps_seq,
                            SignMode sign = SignMode::max_of_both,
                            const KatoQuad& q = {});

// The Kato-class test (KK): sup_x int |f(y)| (eps ^ rho^alpha) / rho^{d+1},
// plus the finite-mass integrability requirement.
DecayTable kato_class_test(const Domain& dom, const XiProfile& profile,
                           const KatoIntegrand& f,
                           const std::vector<double>& eps_seq,
                           const KatoQuad& q = {});

struct InclusionReport {
  DecayTable kato;
  DecayTable k1b;
  bool vacuous = false;  // antecedent failed
  bool implication_ok = false;
};

// (KK) membership must imply K^{1,beta} membership.
InclusionReport kato_inclusion_check(const Domain& dom,
                                     const XiProfile& profile,
                                     const KatoIntegrand& f, double beta,
                                     const std::vector<double>& eps_seq,
                                     const KatoQuad& q = {});

struct LqLpReport {
  bool satisfied = false;
  double margin1 = 0.0;     // (alpha - gamma) - (d/p + alpha/q)
  double margin2 = 0.0;     // q - alpha/(alpha - beta)
  double proof_rate = 0.0;  // (1 + theta)/q* decay exponent from the proof
};

LqLpReport lqlp_predicate(double p, double q, double gamma, double beta, int d,
                          double alpha);

enum class SeminormVariant { ell, ell_beta, ell_tilde };

// ell(r) = sup_{eps <= r} { K^{1,1}_{|b|}(eps) + K^{1,1}_c(eps) } and its
// (beta,beta) and divergence-rewritten variants.
double seminorm(const Domain& dom, const XiProfile& profile,
                const DriftField& b, const ScalarField& c, double r,
                SeminormVariant variant, double beta = 0.0,
                const KatoQuad& q = {});

// least-squares log-log fit helper shared by the decision logic
void fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                int last_n, double& slope, double& r2);

}  // namespace fracheat
