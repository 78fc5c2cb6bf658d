#pragma once

#include <memory>

#include "fracheat/base_kernel.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/subordinator.hpp"
#include "fracheat/xi_profile.hpp"

namespace fracheat {

// Clock-integral quadrature settings. The integral over (0,inf) is split at
// standardized quantiles and each piece uses a fixed tanh-sinh level, so the
// abscissae are shared by every evaluation.
struct ClockQuadSpec {
  int level = 4;          // routine evaluations
  int precise_level = 6;  // finite-difference checks and oracles
};

// The alpha-stable subordinated kernel p^(a)(t,x,y) with derivatives in x,
// evaluated as int p(s,x,y) mu_t(ds).
class FracKernel {
 public:
  FracKernel(const Domain& dom, std::shared_ptr<const Subordinator> sub,
             ClockQuadSpec quad = {});

  const Domain& domain() const { return base_.domain(); }
  const BaseKernel& base() const { return base_; }
  const Subordinator& subordinator() const { return *sub_; }
  double alpha() const { return sub_->alpha(); }
  const ClockQuadSpec& quad() const { return quad_; }

  XiProfile xi_profile() const {
    return XiProfile{sub_->alpha(), base_.domain().d,
                     base_.domain().total_mass()};
  }

  struct Eval {
    double value = 0.0;
    Vec grad{};
    double hess[kMaxDim * kMaxDim] = {};
    double quad_error = 0.0;
  };

  // orders: bit 1 = gradient, bit 2 = hessian
  Eval eval(double t, const Point& x, const Point& y, int orders = 0,
            int level_override = 0) const;

  double value(double t, const Point& x, const Point& y) const {
    return eval(t, x, y, 0).value;
  }

  // mass of the truncation box under p^(a)(t,x,.), plus the analytic far
  // tail 1 - mass; exact up to clock-quadrature error (box geometry)
  QuadResult box_mass(double t, const Point& x) const;

 private:
  BaseKernel base_;
  std::shared_ptr<const Subordinator> sub_;
  ClockQuadSpec quad_;
};

}  // namespace fracheat
