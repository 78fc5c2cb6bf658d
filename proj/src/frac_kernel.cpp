#include "fracheat/frac_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace fracheat {

FracKernel::FracKernel(const Domain& dom,
                       std::shared_ptr<const Subordinator> sub,
                       ClockQuadSpec quad)
    : base_(dom), sub_(std::move(sub)), quad_(quad) {}

FracKernel::Eval FracKernel::eval(double t, const Point& x, const Point& y,
                                  int orders, int level_override) const {
  if (!(t > 0.0)) throw std::invalid_argument("FracKernel: t <= 0");
  const int d = base_.domain().d;
  const bool want_grad = orders & 1;
  const bool want_hess = orders & 2;
  const int level = level_override > 0 ? level_override : quad_.level;

  const Subordinator& S = *sub_;
  const double scale = std::pow(t, 1.0 / S.sub_index());
  const auto& g = S.standardized();
  const auto& splits = S.splits();
  const TanhSinh& ts = TanhSinh::instance();

  double acc[1 + kMaxDim + kMaxDim * kMaxDim] = {};
  double val_finest = 0.0;  // value contribution of the finest-level nodes

  auto add_node = [&](double u, double w, bool finest) {
    if (u <= 0.0) return;
    const double gd = g(u);
    if (gd <= 0.0) return;
    const double s = scale * u;
    Vec gr{};
    double hs[kMaxDim * kMaxDim] = {};
    const double v = base_.eval(s, x, y, (want_grad || want_hess) ? &gr : nullptr,
                                want_hess ? hs : nullptr);
    const double wg = w * gd;
    acc[0] += wg * v;
    if (finest) val_finest += wg * v;
    if (want_grad)
      for (int i = 0; i < d; ++i) acc[1 + i] += wg * gr[i];
    if (want_hess)
      for (int i = 0; i < d * d; ++i) acc[1 + kMaxDim + i] += wg * hs[i];
  };

  for (int p = 0; p + 1 < static_cast<int>(splits.size()); ++p) {
    const double a0 = splits[p], b0 = splits[p + 1];
    const double c = 0.5 * (a0 + b0), hw = 0.5 * (b0 - a0);
    ts.for_nodes(level, [&](double tt, double ww, bool fin) {
      add_node(c + hw * tt, hw * ww, fin);
    });
  }
  const double q_hi = splits.back();
  ts.for_nodes(level, [&](double tt, double ww, bool fin) {
    const double v01 = 0.5 + 0.5 * tt;  // (-1,1) -> (0,1)
    if (v01 <= 0.0) return;
    const double u = q_hi / v01;
    add_node(u, 0.5 * ww * q_hi / (v01 * v01), fin);
  });

  Eval out;
  out.value = acc[0];
  if (want_grad)
    for (int i = 0; i < d; ++i) out.grad[i] = acc[1 + i];
  if (want_hess)
    for (int i = 0; i < d * d; ++i) out.hess[i] = acc[1 + kMaxDim + i];
  // I_{L-1} = 2 (I_L - delta_L), so |I_L - I_{L-1}| = |2 delta_L - I_L|
  out.quad_error = std::abs(2.0 * val_finest - acc[0]);
  return out;
}

QuadResult FracKernel::box_mass(double t, const Point& x) const {
  if (base_.domain().kind != DomainKind::euclidean_box) return {1.0, 0.0};
  return sub_->clock_integral(
      t, [&](double s) { return base_.box_mass(s, x); }, quad_.level);
}

}  // namespace fracheat
