#include "fracheat/picard.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracheat/interp.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

double reports_eta_local(const PicardSolver& S, double t, const Point& x,
                         const Point& x2, const Point& y);

namespace {

// ---------------------------------------------------------------------------
// lattice indexing of per-axis wrapped node differences

struct DeltaTable {
  int n = 0, d = 1;
  bool torus = true;
  int m_range = 0;

  void init(const Grid& g) {
    n = g.nodes_per_axis();
    d = g.domain().d;
    torus = g.domain().kind == DomainKind::torus;
    m_range = torus ? n / 2 + 1 : n;
  }
  int axis_m(int i, int l) const {
    int m = std::abs(i - l);
    if (torus && m > n - m) m = n - m;
    return m;
  }
  std::size_t size() const {
    std::size_t s = 1;
    for (int k = 0; k < d; ++k) s *= static_cast<std::size_t>(m_range);
    return s;
  }
  std::size_t pair_index(const std::array<int, kMaxDim>& mi,
                         const std::array<int, kMaxDim>& ml) const {
    std::size_t idx = 0;
    for (int k = d - 1; k >= 0; --k) idx = idx * m_range + axis_m(mi[k], ml[k]);
    return idx;
  }
  std::array<int, kMaxDim> delta_of(std::size_t idx) const {
    std::array<int, kMaxDim> m{};
    for (int k = 0; k < d; ++k) {
      m[k] = static_cast<int>(idx % m_range);
      idx /= m_range;
    }
    return m;
  }
};

struct KernelRow {
  std::vector<double> val;
  std::vector<double> slope;  // [idx * kMaxDim + k]
};

inline double lagrange4(double f0, double f1, double f2, double f3, double t) {
  const double tm = t - 1.0, tp = t + 1.0, t2 = t - 2.0;
  return (-t * tm * t2 / 6.0) * f0 + (tp * tm * t2 / 2.0) * f1 +
         (-tp * t * t2 / 2.0) * f2 + (tp * t * tm / 6.0) * f3;
}

struct GridInterp {
  const Grid* g = nullptr;
  const double* data = nullptr;

  int wrap_idx(int i) const {
    const int n = g->nodes_per_axis();
    if (g->domain().kind == DomainKind::torus) {
      i %= n;
      if (i < 0) i += n;
      return i;
    }
    return std::clamp(i, 0, n - 1);
  }
  double fetch(int i0, int i1) const {
    const int n = g->nodes_per_axis();
    if (g->domain().d == 1) return data[wrap_idx(i0)];
    return data[wrap_idx(i0) + static_cast<std::size_t>(n) * wrap_idx(i1)];
  }
  double operator()(const Point& x) const {
    const int d = g->domain().d;
    const double h = g->spacing();
    const double ax0 = g->axis_nodes()[0];
    const double v0 = (x[0] - ax0) / h;
    const int b0 = static_cast<int>(std::floor(v0));
    const double t0 = v0 - b0;
    if (d == 1)
      return lagrange4(fetch(b0 - 1, 0), fetch(b0, 0), fetch(b0 + 1, 0),
                       fetch(b0 + 2, 0), t0);
    const double v1 = (x[1] - ax0) / h;
    const int b1 = static_cast<int>(std::floor(v1));
    const double t1 = v1 - b1;
    double fy[4];
    for (int j = -1; j <= 2; ++j)
      fy[j + 1] = lagrange4(fetch(b0 - 1, b1 + j), fetch(b0, b1 + j),
                            fetch(b0 + 1, b1 + j), fetch(b0 + 2, b1 + j), t0);
    return lagrange4(fy[0], fy[1], fy[2], fy[3], t1);
  }
};

struct LatticeInterp {
  const DeltaTable* tab = nullptr;
  const double* data = nullptr;
  int stride = 1;
  int comp = 0;

  int mirror_idx(int m) const {
    const int top = tab->m_range - 1;
    if (m < 0) m = -m;
    if (tab->torus) {
      const int period = 2 * top;
      if (period > 0) {
        m %= period;
        if (m > top) m = period - m;
      }
    } else if (m > top) {
      m = top;
    }
    return m;
  }
  double fetch(int m0, int m1) const {
    const std::size_t idx =
        tab->d == 1 ? static_cast<std::size_t>(mirror_idx(m0))
                    : static_cast<std::size_t>(mirror_idx(m0)) +
                          static_cast<std::size_t>(tab->m_range) *
                              mirror_idx(m1);
    return data[idx * stride + comp];
  }
  double eval(double u0, double u1 = 0.0) const {
    const int b0 = static_cast<int>(std::floor(u0));
    const double t0 = u0 - b0;
    if (tab->d == 1)
      return lagrange4(fetch(b0 - 1, 0), fetch(b0, 0), fetch(b0 + 1, 0),
                       fetch(b0 + 2, 0), t0);
    const int b1 = static_cast<int>(std::floor(u1));
    const double t1 = u1 - b1;
    double fy[4];
    for (int j = -1; j <= 2; ++j)
      fy[j + 1] = lagrange4(fetch(b0 - 1, b1 + j), fetch(b0, b1 + j),
                            fetch(b0 + 1, b1 + j), fetch(b0 + 2, b1 + j), t0);
    return lagrange4(fy[0], fy[1], fy[2], fy[3], t1);
  }
};

// ---------------------------------------------------------------------------
// standardized-profile quadrature nodes

struct ProfileQuad {
  struct Node {
    Vec w{};
    double wp = 0.0;  // weight * P(|w|)
    Vec wdp{};        // weight * P'(|w|) * unit(w)
  };
  std::vector<Node> nodes;
  double tail_mass = 0.0;

  void build(const StableProfile& prof, int gl_order) {
    const GaussLegendre& rule = GaussLegendre::order(gl_order);
    const double panels[9] = {0.0, 1.0, 2.0, 4.0, 8.0,
                              16.0, 32.0, 64.0, 512.0};
    const int n_panels = 8;
    const double w_top = panels[n_panels];
    const double beta = 0.5 * prof.alpha();
    nodes.clear();
    if (prof.dim() == 1) {
      for (int p = 0; p < n_panels; ++p) {
        const double a = panels[p], b = panels[p + 1];
        for (std::size_t q = 0; q < rule.nodes().size(); ++q) {
          const double w = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes()[q];
          const double gw = 0.5 * (b - a) * rule.weights()[q];
          for (double sgn : {1.0, -1.0}) {
            Node nd;
            nd.w[0] = sgn * w;
            nd.wp = gw * prof.density(w);
            nd.wdp[0] = gw * prof.radial_deriv(w) * sgn;
            nodes.push_back(nd);
          }
        }
      }
      double tm = 0.0;
      const auto& c = prof.tail_coefficients();
      for (std::size_t k = 1; k <= c.size(); ++k) {
        const double expo = 2.0 * k * beta;
        tm += c[k - 1] * std::pow(w_top, -expo) / expo;
      }
      tail_mass = 2.0 * tm;
    } else {
      const int n_ang = 16;
      for (int p = 0; p < n_panels; ++p) {
        const double a = panels[p], b = panels[p + 1];
        for (std::size_t q = 0; q < rule.nodes().size(); ++q) {
          const double r = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes()[q];
          const double gw = 0.5 * (b - a) * rule.weights()[q] * r *
                            (2.0 * M_PI / n_ang);
          for (int aa = 0; aa < n_ang; ++aa) {
            const double phi = 2.0 * M_PI * (aa + 0.5) / n_ang;
            Node nd;
            nd.w[0] = r * std::cos(phi);
            nd.w[1] = r * std::sin(phi);
            nd.wp = gw * prof.density(r);
            nd.wdp[0] = gw * prof.radial_deriv(r) * std::cos(phi);
            nd.wdp[1] = gw * prof.radial_deriv(r) * std::sin(phi);
            nodes.push_back(nd);
          }
        }
      }
      double tm = 0.0;
      const auto& c = prof.tail_coefficients();
      for (std::size_t k = 1; k <= c.size(); ++k) {
        const double expo = 2.0 * k * beta;
        tm += 2.0 * M_PI * c[k - 1] * std::pow(w_top, -expo) / expo;
      }
      tail_mass = tm;
    }
  }
};

inline double pow_safe(double x, double e) {
  return std::pow(std::max(x, 0.0), e);
}

// core lattice offsets (standardized units)
const double kCoreRadii1D[] = {0.25, 0.5,  0.75, 1.0, 1.3, 1.65, 2.05,
                               2.55, 3.15, 3.9,  4.8, 6.0, 7.4,  9.2,
                               11.5, 16.0};
const double kCoreRadii2D[] = {0.5, 1.0, 1.7, 2.6, 4.0, 6.5, 10.0, 16.0};
constexpr double kCoreWMax = 16.0;
constexpr int kCoreAngles = 8;

std::vector<Vec> make_core_offsets(int d) {
  std::vector<Vec> w;
  w.push_back(Vec{});  // center
  if (d == 1) {
    for (double r : kCoreRadii1D) {
      w.push_back(Vec{r, 0, 0});
      w.push_back(Vec{-r, 0, 0});
    }
  } else {
    for (int a = 0; a < kCoreAngles; ++a) {
      const double phi = 2.0 * M_PI * a / kCoreAngles;
      for (double r : kCoreRadii2D)
        w.push_back(Vec{r * std::cos(phi), r * std::sin(phi), 0});
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// solve context

struct Ctx {
  const Grid* grid;
  const FracKernel* K;
  const StableProfile* prof;
  const DeltaTable* tab;
  const ProfileQuad* pq;
  const SolveConfig* cfg;
  const DriftField* b;
  const ScalarField* c;
  const Domain* dom;
  double alpha;
  double h;
  std::size_t N;
  int d;
  double s0 = 0.0;
  Point y{};
  std::size_t iy = 0;

  double narrow_delta() const {
    return std::pow(cfg->narrow_factor * h, alpha);
  }

  void build_row(double dt, KernelRow& row) const {
    row.val.resize(tab->size());
    row.slope.assign(tab->size() * kMaxDim, 0.0);
    for (std::size_t idx = 0; idx < tab->size(); ++idx) {
      const auto m = tab->delta_of(idx);
      Point a{}, z{};
      for (int k = 0; k < d; ++k) {
        a[k] = grid->axis_nodes()[0];
        z[k] = grid->axis_nodes()[m[k]];
      }
      const auto ev = K->eval(dt, a, z, 1, cfg->row_clock_level);
      row.val[idx] = ev.value;
      for (int k = 0; k < d; ++k) {
        const double delta = dom->axis_diff(a[k], z[k]);
        row.slope[idx * kMaxDim + k] = (m[k] == 0) ? 0.0 : ev.grad[k] / delta;
      }
    }
  }

  double box_mass_fast(double dt, const Point& x) const {
    if (dom->kind == DomainKind::torus || d != 1) return 1.0;
    const double s = std::pow(dt, -1.0 / alpha);
    const double R = dom->extent;
    return 1.0 - prof->mass_beyond((R - x[0]) * s) -
           prof->mass_beyond((R + x[0]) * s);
  }

  double narrow_kernel(double dt, const Point& q, const Point& z,
                       Vec* grad) const {
    const double scale = std::pow(dt, -1.0 / alpha);
    double delta[kMaxDim];
    for (int k = 0; k < d; ++k) delta[k] = dom->axis_diff(q[k], z[k]);
    const int images = dom->kind == DomainKind::torus ? 3 : 0;
    const double L = dom->extent;
    double val = 0.0;
    Vec g{};
    if (d == 1) {
      for (int k = -images; k <= images; ++k) {
        const double u = delta[0] + k * L;
        const double r = std::abs(u) * scale;
        val += prof->density(r);
        if (grad) g[0] += prof->radial_deriv(r) * ((u >= 0.0) ? 1.0 : -1.0);
      }
      val *= scale;
      if (grad) (*grad)[0] = g[0] * scale * scale;
      return val;
    }
    for (int k0 = -images; k0 <= images; ++k0)
      for (int k1 = -images; k1 <= images; ++k1) {
        const double u0 = delta[0] + k0 * L, u1 = delta[1] + k1 * L;
        const double r = std::sqrt(u0 * u0 + u1 * u1);
        val += prof->density(r * scale);
        if (grad && r > 0.0) {
          const double dr = prof->radial_deriv(r * scale);
          g[0] += dr * u0 / r;
          g[1] += dr * u1 / r;
        }
      }
    val *= scale * scale;
    if (grad)
      for (int k = 0; k < d; ++k) (*grad)[k] = g[k] * scale * scale * scale;
    return val;
  }
};

struct OuterKernel {
  const Ctx* cx;
  double dt;
  const KernelRow* row;  // null: profile path

  double value(const Point& q, const Point& z) const {
    if (!row) return cx->narrow_kernel(dt, q, z, nullptr);
    LatticeInterp li{cx->tab, row->val.data(), 1, 0};
    const double u0 = std::abs(cx->dom->axis_diff(q[0], z[0])) / cx->h;
    if (cx->d == 1) return li.eval(u0);
    return li.eval(u0, std::abs(cx->dom->axis_diff(q[1], z[1])) / cx->h);
  }
  void grad(const Point& q, const Point& z, Vec& g) const {
    if (!row) {
      cx->narrow_kernel(dt, q, z, &g);
      return;
    }
    const double u0 = std::abs(cx->dom->axis_diff(q[0], z[0])) / cx->h;
    const double u1 =
        cx->d == 1 ? 0.0 : std::abs(cx->dom->axis_diff(q[1], z[1])) / cx->h;
    for (int k = 0; k < cx->d; ++k) {
      LatticeInterp li{cx->tab, row->slope.data(), kMaxDim, k};
      const double sl = cx->d == 1 ? li.eval(u0) : li.eval(u0, u1);
      g[k] = sl * cx->dom->axis_diff(q[k], z[k]);
    }
  }
};

// convolution patterns against a grid function F
struct ConvIntegrator {
  const Ctx* cx = nullptr;
  double dt = 0.0;
  bool narrow = false;
  const KernelRow* row = nullptr;
  const double* F = nullptr;
  std::vector<double> gradFc[kMaxDim];
  GridInterp Fi;
  GridInterp aI[kMaxDim];
  std::vector<double> mass_row;
  double m1_torus = 0.0;
  double f_mean = 0.0;

  void prepare(const Ctx& c, double dt_, const double* Fdata,
               const KernelRow* row_) {
    cx = &c;
    dt = dt_;
    F = Fdata;
    row = row_;
    narrow = row_ == nullptr;
    Fi = GridInterp{c.grid, Fdata};
    const std::size_t N = c.N;
    const int n = c.grid->nodes_per_axis();
    const bool torus = c.dom->kind == DomainKind::torus;
    if (!narrow) {
      for (int k = 0; k < c.d; ++k) gradFc[k].assign(N, 0.0);
      for (std::size_t i = 0; i < N; ++i) {
        const auto mi = c.grid->multi_index(i);
        for (int k = 0; k < c.d; ++k) {
          auto mp = mi, mm = mi;
          mp[k] = mi[k] + 1;
          mm[k] = mi[k] - 1;
          double width = 2.0 * c.h;
          if (torus) {
            mp[k] = (mp[k] + n) % n;
            mm[k] = (mm[k] + n) % n;
          } else {
            if (mp[k] > n - 1) {
              mp[k] = n - 1;
              width = c.h;
            }
            if (mm[k] < 0) {
              mm[k] = 0;
              width = c.h;
            }
          }
          gradFc[k][i] = (Fdata[c.grid->flat_index(mp)] -
                          Fdata[c.grid->flat_index(mm)]) /
                         width;
        }
      }
      for (int k = 0; k < c.d; ++k) aI[k] = GridInterp{c.grid, gradFc[k].data()};
      if (!torus && c.d == 1) {
        mass_row.resize(N);
        for (std::size_t i = 0; i < N; ++i)
          mass_row[i] = c.box_mass_fast(dt, c.grid->node(i));
      }
      if (torus) {
        if (c.d == 1) {
          m1_torus = 1.0 - c.dom->extent * row->val[c.tab->m_range - 1];
        } else {
          double q = 0.0;
          for (int m1 = 0; m1 < c.tab->m_range; ++m1) {
            const std::size_t idx =
                static_cast<std::size_t>(c.tab->m_range - 1) +
                static_cast<std::size_t>(c.tab->m_range) * m1;
            const double wgt =
                (m1 == 0 || m1 == c.tab->m_range - 1) ? 1.0 : 2.0;
            q += row->val[idx] * wgt * c.h;
          }
          m1_torus = 1.0 - c.dom->extent * q;
        }
      }
    }
    if (torus) {
      double fm = 0.0;
      for (std::size_t i = 0; i < N; ++i) fm += Fdata[i] * c.grid->weight(i);
      f_mean = fm / c.dom->total_mass();
    }
  }

  double row_val_at(const Point& q, const Point& z) const {
    LatticeInterp li{cx->tab, row->val.data(), 1, 0};
    const double u0 = std::abs(cx->dom->axis_diff(q[0], z[0])) / cx->h;
    if (cx->d == 1) return li.eval(u0);
    return li.eval(u0, std::abs(cx->dom->axis_diff(q[1], z[1])) / cx->h);
  }

  // value route at an arbitrary target point
  double value_at_point(const Point& q) const {
    const Ctx& c = *cx;
    if (narrow) {
      const double scale = std::pow(dt, 1.0 / c.alpha);
      double acc = 0.0;
      for (const auto& nd : c.pq->nodes) {
        Point z = q;
        for (int k = 0; k < c.d; ++k) z[k] += scale * nd.w[k];
        acc += nd.wp * Fi(z);
      }
      if (c.dom->kind == DomainKind::torus) acc += f_mean * c.pq->tail_mass;
      return acc;
    }
    const double Fq = Fi(q);
    double acc = Fq * (mass_row.empty() ? 1.0 : c.box_mass_fast(dt, q));
    for (std::size_t l = 0; l < c.N; ++l)
      acc += c.grid->weight(l) * row_val_at(q, c.grid->node(l)) * (F[l] - Fq);
    return acc;
  }

  void grad_at_point(const Point& q, Vec& out) const {
    const Ctx& c = *cx;
    out = Vec{};
    if (narrow) {
      const double scale = std::pow(dt, 1.0 / c.alpha);
      const double inv = 1.0 / scale;
      for (const auto& nd : c.pq->nodes) {
        Point z = q;
        for (int k = 0; k < c.d; ++k) z[k] += scale * nd.w[k];
        const double fv = Fi(z);
        for (int k = 0; k < c.d; ++k) out[k] -= inv * nd.wdp[k] * fv;
      }
      return;
    }
    const double Fq = Fi(q);
    double a[kMaxDim];
    for (int k = 0; k < c.d; ++k) a[k] = aI[k](q);
    const bool plain = (c.dom->kind == DomainKind::euclidean_box && c.d == 2);
    double m1[kMaxDim], m0g[kMaxDim];
    for (int k = 0; k < c.d; ++k) {
      if (c.dom->kind == DomainKind::torus) {
        m1[k] = m1_torus;
        m0g[k] = 0.0;
      } else if (c.d == 1) {
        const double R = c.dom->extent;
        Point edgeL = make_point(-R), edgeR = make_point(R);
        const double pL = row_val_at(q, edgeL);
        const double pR = row_val_at(q, edgeR);
        m0g[k] = pL - pR;
        m1[k] = c.box_mass_fast(dt, q) - (R - q[0]) * pR - (R + q[0]) * pL;
      } else {
        m0g[k] = 0.0;
        m1[k] = 0.0;
      }
    }
    for (int k = 0; k < c.d; ++k)
      out[k] = plain ? 0.0 : a[k] * m1[k] + Fq * m0g[k];
    for (std::size_t l = 0; l < c.N; ++l) {
      const Point zl = c.grid->node(l);
      const double wl = c.grid->weight(l);
      double corr = F[l];
      if (!plain) {
        corr -= Fq;
        for (int jj = 0; jj < c.d; ++jj)
          corr -= a[jj] * c.dom->axis_diff(zl[jj], q[jj]);
      }
      const double u0 = std::abs(c.dom->axis_diff(q[0], zl[0])) / c.h;
      const double u1 =
          c.d == 1 ? 0.0 : std::abs(c.dom->axis_diff(q[1], zl[1])) / c.h;
      for (int k = 0; k < c.d; ++k) {
        LatticeInterp li{c.tab, row->slope.data(), kMaxDim, k};
        const double sl = c.d == 1 ? li.eval(u0) : li.eval(u0, u1);
        out[k] += wl * sl * c.dom->axis_diff(q[k], zl[k]) * corr;
      }
    }
  }

  // grid-node fast paths (exact lattice indexing)
  double value_at(std::size_t i) const {
    const Ctx& c = *cx;
    if (narrow) return value_at_point(c.grid->node(i));
    const auto mi = c.grid->multi_index(i);
    const double Fi0 = F[i];
    double acc = Fi0 * (mass_row.empty() ? 1.0 : mass_row[i]);
    for (std::size_t l = 0; l < c.N; ++l) {
      const std::size_t idx = c.tab->pair_index(mi, c.grid->multi_index(l));
      acc += c.grid->weight(l) * row->val[idx] * (F[l] - Fi0);
    }
    return acc;
  }

  void grad_at(std::size_t i, Vec& out) const {
    const Ctx& c = *cx;
    out = Vec{};
    if (narrow) {
      grad_at_point(c.grid->node(i), out);
      return;
    }
    const auto mi = c.grid->multi_index(i);
    const Point xi = c.grid->node(i);
    const double Fi0 = F[i];
    const bool plain = (c.dom->kind == DomainKind::euclidean_box && c.d == 2);
    double a[kMaxDim];
    for (int k = 0; k < c.d; ++k) a[k] = gradFc[k][i];
    double m1[kMaxDim], m0g[kMaxDim];
    for (int k = 0; k < c.d; ++k) {
      if (c.dom->kind == DomainKind::torus) {
        m1[k] = m1_torus;
        m0g[k] = 0.0;
      } else if (c.d == 1) {
        const int n = c.grid->nodes_per_axis();
        const double R = c.dom->extent;
        const double pR = row->val[n - 1 - static_cast<int>(i)];
        const double pL = row->val[i];
        m0g[k] = pL - pR;
        m1[k] = (mass_row.empty() ? 1.0 : mass_row[i]) - (R - xi[0]) * pR -
                (R + xi[0]) * pL;
      } else {
        m0g[k] = 0.0;
        m1[k] = 0.0;
      }
    }
    for (int k = 0; k < c.d; ++k)
      out[k] = plain ? 0.0 : a[k] * m1[k] + Fi0 * m0g[k];
    for (std::size_t l = 0; l < c.N; ++l) {
      const auto ml = c.grid->multi_index(l);
      const std::size_t idx = c.tab->pair_index(mi, ml);
      const double wl = c.grid->weight(l);
      double corr = F[l];
      if (!plain) {
        corr -= Fi0;
        for (int jj = 0; jj < c.d; ++jj) {
          const double zl_minus_xi = c.dom->axis_diff(
              c.grid->axis_nodes()[ml[jj]], c.grid->axis_nodes()[mi[jj]]);
          corr -= a[jj] * zl_minus_xi;
        }
      }
      for (int k = 0; k < c.d; ++k) {
        const double delta_k = c.dom->axis_diff(c.grid->axis_nodes()[mi[k]],
                                                c.grid->axis_nodes()[ml[k]]);
        out[k] += wl * row->slope[idx * kMaxDim + k] * delta_k * corr;
      }
    }
  }
};

// interpolation of the previous iterate between slices (grid channels);
// each channel factors out its own fitted leading power so the first
// intervals of the graded slices interpolate the smooth remainder
struct PrevInterp {
  std::vector<Pchip> chan;  // [(1+d) per node]
  std::vector<double> nu_chan;
  int d = 1;
  double s0 = 0.0, span = 1.0, nu = 0.0;

  double power(double r, double nuc) const {
    return nuc == 0.0 ? 1.0 : pow_safe((r - s0) / span, nuc);
  }
  double value(std::size_t i, double r) const {
    const std::size_t c = i * (1 + d);
    return chan[c](r) * power(r, nu_chan[c]);
  }
  double grad(std::size_t i, int k, double r) const {
    const std::size_t c = i * (1 + d) + 1 + k;
    return chan[c](r) * power(r, nu_chan[c]);
  }
};

// fitted exponent of the leading power of |y(r)| near r = s0, from the two
// earliest slices; falls back to def when the data is unusable
double fit_leading_power(double r1, double r2, double y1, double y2,
                         double def) {
  const double a1 = std::abs(y1), a2 = std::abs(y2);
  if (!(a1 > 1e-250) || !(a2 > 1e-250) || y1 * y2 <= 0.0) return def;
  const double nu = std::log(a2 / a1) / std::log(r2 / r1);
  if (!std::isfinite(nu)) return def;
  return std::clamp(nu, 0.0, 4.0);
}

// core channels: the iterate's standardized ratios on the core lattice,
// pchip in r per channel, rebuilt into a w-interpolant at each r-node
struct CorePrev {
  bool active = false;
  int d = 1;
  std::size_t n_core = 0;
  const std::vector<Vec>* offsets = nullptr;
  std::vector<Pchip> chan;  // [(1+d) * n_core]
  std::vector<double> nu_chan;
  double s0 = 0.0, span = 1.0, nu = 0.0;

  double power(double r, double nuc) const {
    return nuc == 0.0 ? 1.0 : pow_safe((r - s0) / span, nuc);
  }
};

// per-r evaluation of the core channels: cubic across the offset lattice;
// unlimited cubic, since the ratios change sign across the core
struct CoreAtR {
  bool active = false;
  int d = 1;
  CubicBessel val1, g1[kMaxDim];
  std::vector<CubicBessel> val2, g2[kMaxDim];
  double center_val = 0.0, center_g[kMaxDim] = {};

  void build(const CorePrev& cp, double r) {
    active = cp.active;
    if (!active) return;
    d = cp.d;
    const std::size_t nc = cp.n_core;
    auto cval = [&](std::size_t c, int ch) {
      const std::size_t q = c * (1 + d) + ch;
      return cp.chan[q](r) * cp.power(r, cp.nu_chan[q]);
    };
    if (d == 1) {
      // offsets: index 0 is the center, then signed pairs
      std::vector<std::pair<double, std::size_t>> ord;
      for (std::size_t c = 0; c < nc; ++c)
        ord.push_back({(*cp.offsets)[c][0], c});
      std::sort(ord.begin(), ord.end());
      std::vector<double> xs(nc), v(nc), g(nc);
      for (std::size_t q = 0; q < nc; ++q) {
        xs[q] = ord[q].first;
        v[q] = cval(ord[q].second, 0);
        g[q] = cval(ord[q].second, 1);
      }
      val1 = CubicBessel(xs, v);
      g1[0] = CubicBessel(xs, g);
    } else {
      center_val = cval(0, 0);
      for (int k = 0; k < d; ++k) center_g[k] = cval(0, 1 + k);
      const int nr = static_cast<int>(sizeof(kCoreRadii2D) / sizeof(double));
      val2.clear();
      for (int k = 0; k < d; ++k) g2[k].clear();
      for (int a = 0; a < kCoreAngles; ++a) {
        std::vector<double> xs(nr + 1), v(nr + 1), gg[kMaxDim];
        for (int k = 0; k < d; ++k) gg[k].resize(nr + 1);
        xs[0] = 0.0;
        v[0] = center_val;
        for (int k = 0; k < d; ++k) gg[k][0] = center_g[k];
        for (int ir = 0; ir < nr; ++ir) {
          const std::size_t c = 1 + a * nr + ir;
          xs[ir + 1] = kCoreRadii2D[ir];
          v[ir + 1] = cval(c, 0);
          for (int k = 0; k < d; ++k) gg[k][ir + 1] = cval(c, 1 + k);
        }
        val2.emplace_back(xs, v);
        for (int k = 0; k < d; ++k) g2[k].emplace_back(xs, gg[k]);
      }
    }
  }

  double value(const Vec& w) const {
    if (d == 1) return val1(w[0]);
    const double rho = std::sqrt(w[0] * w[0] + w[1] * w[1]);
    if (rho <= 0.0) return center_val;
    double phi = std::atan2(w[1], w[0]);
    if (phi < 0) phi += 2.0 * M_PI;
    const double fa = phi / (2.0 * M_PI) * kCoreAngles;
    const int a0 = static_cast<int>(fa) % kCoreAngles;
    const int a1 = (a0 + 1) % kCoreAngles;
    const double t = fa - std::floor(fa);
    return (1.0 - t) * val2[a0](rho) + t * val2[a1](rho);
  }
  double grad(const Vec& w, int k) const {
    if (d == 1) return g1[0](w[0]);
    const double rho = std::sqrt(w[0] * w[0] + w[1] * w[1]);
    if (rho <= 0.0) return center_g[k];
    double phi = std::atan2(w[1], w[0]);
    if (phi < 0) phi += 2.0 * M_PI;
    const double fa = phi / (2.0 * M_PI) * kCoreAngles;
    const int a0 = static_cast<int>(fa) % kCoreAngles;
    const int a1 = (a0 + 1) % kCoreAngles;
    const double t = fa - std::floor(fa);
    return (1.0 - t) * g2[k][a0](rho) + t * g2[k][a1](rho);
  }
};

}  // namespace

// ---------------------------------------------------------------------------

Point KernelField::core_point(std::size_t slice, std::size_t c,
                              const Domain& dom) const {
  const double scale = std::pow(times[slice] - s, 1.0 / alpha);
  Point p = y;
  for (int k = 0; k < dom.d; ++k) p[k] += scale * core_w[c][k];
  return dom.wrap(p);
}

struct PicardSolver::StepScratch {};

PicardSolver::PicardSolver(const Domain& dom,
                           std::shared_ptr<const Subordinator> sub,
                           DriftField b, ScalarField c, SolveConfig cfg)
    : dom_(dom),
      grid_(dom, cfg.grid),
      kernel_(dom, sub, ClockQuadSpec{cfg.clock_level, 6}),
      profile_(sub, dom.d),
      b_(std::move(b)),
      c_(std::move(c)),
      cfg_(cfg) {
  if (!(sub->alpha() > 1.0 && sub->alpha() < 2.0))
    throw std::invalid_argument("PicardSolver: alpha must be in (1,2)");
  if (dom.d > 2)
    throw std::invalid_argument("PicardSolver: d <= 2 supported");
}

namespace {

Ctx make_ctx(const PicardSolver& S, const DeltaTable& tab,
             const ProfileQuad& pq, const KernelField& f) {
  Ctx c{};
  c.grid = &S.grid();
  c.K = &S.kernel();
  c.prof = &S.profile();
  c.tab = &tab;
  c.pq = &pq;
  c.cfg = &S.config();
  c.b = &S.drift();
  c.c = &S.potential();
  c.dom = &S.grid().domain();
  c.alpha = S.kernel().alpha();
  c.h = S.grid().spacing();
  c.N = S.grid().size();
  c.d = c.dom->d;
  c.s0 = f.s;
  c.y = f.y;
  c.iy = S.grid().nearest(f.y);
  return c;
}

}  // namespace

void PicardSolver::init_theta0(Mode mode, KernelField& f,
                               const InitialData* v) const {
  DeltaTable tab;
  tab.init(grid_);
  ProfileQuad pq;
  pq.build(profile_, 12);
  Ctx cx = make_ctx(*this, tab, pq, f);

  const std::size_t N = grid_.size();
  const std::size_t J = f.times.size();
  f.n_nodes = N;
  f.alpha = cx.alpha;
  f.sum_val.assign(J * N, 0.0);
  f.sum_grad.assign(J * N, Vec{});
  f.theta_val.assign(J * N, 0.0);
  f.theta_grad.assign(J * N, Vec{});
  f.p_ref.assign(J * N, 1.0);

  if (mode == Mode::data) {
    std::vector<double> vg(N);
    for (std::size_t i = 0; i < N; ++i) vg[i] = v->value(grid_.node(i));
    f.anchor_val = vg;
    f.anchor_grad.assign(N, Vec{});
    if (v->gradient) {
      for (std::size_t i = 0; i < N; ++i)
        f.anchor_grad[i] = v->gradient(grid_.node(i));
    } else {
      const int n = grid_.nodes_per_axis();
      const bool torus = dom_.kind == DomainKind::torus;
      for (std::size_t i = 0; i < N; ++i) {
        const auto mi = grid_.multi_index(i);
        for (int k = 0; k < dom_.d; ++k) {
          auto mp = mi, mm = mi;
          mp[k] = mi[k] + 1;
          mm[k] = mi[k] - 1;
          double width = 2.0 * grid_.spacing();
          if (torus) {
            mp[k] = (mp[k] + n) % n;
            mm[k] = (mm[k] + n) % n;
          } else {
            if (mp[k] > n - 1) {
              mp[k] = n - 1;
              width = grid_.spacing();
            }
            if (mm[k] < 0) {
              mm[k] = 0;
              width = grid_.spacing();
            }
          }
          f.anchor_grad[i][k] =
              (vg[grid_.flat_index(mp)] - vg[grid_.flat_index(mm)]) / width;
        }
      }
    }
    parallel_for(
        J,
        [&](std::size_t j) {
          const double dt = f.times[j] - f.s;
          const bool narrow =
              std::pow(dt, 1.0 / cx.alpha) < cfg_.narrow_factor * cx.h;
          KernelRow row;
          if (!narrow) cx.build_row(dt, row);
          ConvIntegrator conv;
          conv.prepare(cx, dt, vg.data(), narrow ? nullptr : &row);
          for (std::size_t i = 0; i < N; ++i) {
            const std::size_t id = f.idx(j, i);
            f.theta_val[id] = conv.value_at(i);
            Vec g{};
            conv.grad_at(i, g);
            f.theta_grad[id] = g;
          }
        },
        cfg_.parallel);
    double s0n = 0.0;
    for (double v0 : f.theta_val) s0n = std::max(s0n, std::abs(v0));
    f.norm_scale = std::max(s0n, 1e-300);
  } else {
    // delta-type sources: theta0 is the unperturbed kernel
    f.core_w = make_core_offsets(dom_.d);
    f.n_core = f.core_w.size();
    f.core_val.assign(J * f.n_core, 0.0);
    f.core_ref.assign(J * f.n_core, 1.0);
    f.core_grad.assign(J * f.n_core, Vec{});
    const Point src = grid_.node(cx.iy);
    parallel_for(
        J,
        [&](std::size_t j) {
          const double dt = f.times[j] - f.s;
          KernelRow row;
          cx.build_row(dt, row);
          const auto my = grid_.multi_index(cx.iy);
          for (std::size_t i = 0; i < N; ++i) {
            const std::size_t id = f.idx(j, i);
            const auto mi = grid_.multi_index(i);
            const std::size_t pidx = tab.pair_index(mi, my);
            f.theta_val[id] = row.val[pidx];
            f.p_ref[id] = row.val[pidx];
            Vec g{};
            const Point zi = grid_.node(i);
            for (int k = 0; k < cx.d; ++k) {
              const double sl = row.slope[pidx * kMaxDim + k];
              if (mode == Mode::rewritten)
                g[k] = sl * dom_.axis_diff(f.y[k], zi[k]);
              else if (mode == Mode::primal)
                g[k] = sl * dom_.axis_diff(zi[k], f.y[k]);
            }
            f.theta_grad[id] = g;
          }
          for (std::size_t c = 0; c < f.n_core; ++c) {
            const Point q = f.core_point(j, c, dom_);
            const auto ev = kernel_.eval(dt, q, src, 1, cfg_.row_clock_level);
            const std::size_t cid = j * f.n_core + c;
            f.core_val[cid] = ev.value;
            f.core_ref[cid] = ev.value;
            Vec g{};
            for (int k = 0; k < cx.d; ++k) {
              if (mode == Mode::rewritten)
                g[k] = -ev.grad[k];
              else if (mode == Mode::primal)
                g[k] = ev.grad[k];
            }
            f.core_grad[cid] = g;
          }
        },
        cfg_.parallel);
  }
  f.sum_val = f.theta_val;
  f.sum_grad = f.theta_grad;
  f.history.push_back({1.0, 1.0, 0.0});
}

void PicardSolver::step(Mode mode, int n, KernelField& f) const {
  DeltaTable tab;
  tab.init(grid_);
  ProfileQuad pq;
  pq.build(profile_, 12);
  Ctx cx = make_ctx(*this, tab, pq, f);

  const std::size_t N = grid_.size();
  const std::size_t J = f.times.size();
  const std::size_t NC = f.n_core;
  const double alpha = cx.alpha;
  const double q_sub = alpha / (alpha - 1.0);
  const double narrow_dt = cx.narrow_delta();
  const GaussLegendre& rule = GaussLegendre::order(cfg_.time_gl);
  const bool exact0 = (n == 1) && mode != Mode::data;
  const bool is_delta = mode != Mode::data;
  const bool track_grad = mode != Mode::dual;
  const int channels = (mode == Mode::rewritten) ? 1 + cx.d : 1;
  const Point src = grid_.node(cx.iy);

  // interpolants of the previous iterate
  PrevInterp prev;
  prev.d = cx.d;
  prev.s0 = f.s;
  prev.span = f.times.back() - f.s;
  prev.nu = is_delta ? (n - 1) * (alpha - 1.0) / alpha : 0.0;
  CorePrev core;
  core.d = cx.d;
  core.n_core = NC;
  core.offsets = &f.core_w;
  core.s0 = f.s;
  core.span = prev.span;
  core.nu = prev.nu;
  core.active = is_delta && !exact0 && NC > 0;
  if (!exact0) {
    std::vector<double> xs;
    xs.push_back(f.s);
    for (double t : f.times) xs.push_back(t);
    prev.chan.reserve(N * (1 + cx.d));
    prev.nu_chan.reserve(N * (1 + cx.d));
    std::vector<double> raw(J);
    for (std::size_t i = 0; i < N; ++i) {
      for (int ch = 0; ch < 1 + cx.d; ++ch) {
        for (std::size_t j = 0; j < J; ++j) {
          const std::size_t id = f.idx(j, i);
          if (ch == 0) {
            raw[j] =
                is_delta ? f.theta_val[id] / f.p_ref[id] : f.theta_val[id];
          } else {
            const double gdt =
                is_delta ? std::pow(f.times[j] - f.s, 1.0 / alpha) : 1.0;
            raw[j] = is_delta ? f.theta_grad[id][ch - 1] * gdt / f.p_ref[id]
                              : f.theta_grad[id][ch - 1];
          }
        }
        const double nuc =
            is_delta ? fit_leading_power(f.times[0] - f.s, f.times[1] - f.s,
                                         raw[0], raw[1], prev.nu)
                     : 0.0;
        std::vector<double> ys(J + 1);
        for (std::size_t j = 0; j < J; ++j)
          ys[j + 1] = raw[j] / prev.power(f.times[j], nuc);
        if (mode == Mode::data && n == 1) {
          ys[0] = (ch == 0) ? f.anchor_val[i] : f.anchor_grad[i][ch - 1];
        } else if (mode == Mode::data) {
          ys[0] = 0.0;
        } else {
          ys[0] = ys[1];
        }
        prev.chan.emplace_back(xs, ys);
        prev.nu_chan.push_back(nuc);
      }
    }
    if (core.active) {
      core.chan.reserve(NC * (1 + cx.d));
      core.nu_chan.reserve(NC * (1 + cx.d));
      for (std::size_t c = 0; c < NC; ++c) {
        for (int ch = 0; ch < 1 + cx.d; ++ch) {
          for (std::size_t j = 0; j < J; ++j) {
            const std::size_t cid = j * NC + c;
            const double ref = f.core_ref[cid];
            if (ch == 0) {
              raw[j] = f.core_val[cid] / ref;
            } else {
              const double gdt = std::pow(f.times[j] - f.s, 1.0 / alpha);
              raw[j] = f.core_grad[cid][ch - 1] * gdt / ref;
            }
          }
          const double nuc =
              fit_leading_power(f.times[0] - f.s, f.times[1] - f.s, raw[0],
                                raw[1], core.nu);
          std::vector<double> ys(J + 1);
          for (std::size_t j = 0; j < J; ++j)
            ys[j + 1] = raw[j] / core.power(f.times[j], nuc);
          ys[0] = ys[1];
          core.chan.emplace_back(xs, ys);
          core.nu_chan.push_back(nuc);
        }
      }
    }
  }

  std::vector<double> theta_new(J * N, 0.0);
  std::vector<Vec> grad_new(J * N, Vec{});
  std::vector<double> core_new(J * NC, 0.0);
  std::vector<Vec> core_gnew(J * NC, Vec{});

  parallel_for(
      J,
      [&](std::size_t j) {
        const double T = f.times[j];
        const double mid = 0.5 * (f.s + T);
        std::vector<double> F(N);
        std::vector<double> Fb[kMaxDim];
        for (int k = 0; k < cx.d; ++k) Fb[k].resize(N);
        std::vector<double> Fc(N);
        std::vector<double> chanG(channels * N);
        std::vector<double> phi_r(N), gam_r(N * kMaxDim);
        const auto my = grid_.multi_index(cx.iy);

        // core targets of this slice
        std::vector<Point> ctarget(NC);
        for (std::size_t c = 0; c < NC; ++c)
          ctarget[c] = f.core_point(j, c, dom_);

        for (int half = 0; half < 2; ++half) {
          for (std::size_t g = 0; g < rule.nodes().size(); ++g) {
            const double u = 0.5 + 0.5 * rule.nodes()[g];
            const double gw = 0.5 * rule.weights()[g];
            const double span = (half == 0) ? mid - f.s : T - mid;
            const double rs = span * std::pow(u, q_sub);
            const double wr = span * q_sub * std::pow(u, q_sub - 1.0) * gw;
            const double r = (half == 0) ? f.s + rs : T - rs;
            if (!(r > f.s && r < T) || !(wr > 0.0)) continue;
            const double din = r - f.s;
            const double dout = T - r;
            const bool nin = is_delta && din < narrow_dt;
            const bool nout = dout < narrow_dt;

            KernelRow row_out, row_in;
            if (!nout) cx.build_row(dout, row_out);
            OuterKernel OK{&cx, dout, nout ? nullptr : &row_out};

            CoreAtR coreR;
            if (core.active) coreR.build(core, r);
            const double sc_in = std::pow(din, -1.0 / alpha);
            const double scale_in = std::pow(din, 1.0 / alpha);

            // standardized offset of a point relative to the source
            auto w_of = [&](const Point& zeta) {
              Vec w{};
              for (int k = 0; k < cx.d; ++k)
                w[k] = dom_.axis_diff(zeta[k], src[k]) * sc_in;
              return w;
            };
            auto w_norm = [&](const Vec& w) {
              double s2 = 0.0;
              for (int k = 0; k < cx.d; ++k) s2 += w[k] * w[k];
              return std::sqrt(s2);
            };

            if (nin) {
              // ratio grids at r (grid channels)
              if (!exact0) {
                for (std::size_t l = 0; l < N; ++l) {
                  phi_r[l] = prev.value(l, r);
                  for (int k = 0; k < cx.d; ++k)
                    gam_r[l * kMaxDim + k] = prev.grad(l, k, r);
                }
              }
              GridInterp phiI{&grid_, phi_r.data()};
              GridInterp gamI[kMaxDim];
              std::vector<double> gam_comp[kMaxDim];
              for (int k = 0; k < cx.d; ++k) {
                gam_comp[k].resize(N);
                for (std::size_t l = 0; l < N; ++l)
                  gam_comp[k][l] = gam_r[l * kMaxDim + k];
                gamI[k] = GridInterp{&grid_, gam_comp[k].data()};
              }
              auto phi_at = [&](const Point& zeta, const Vec& w) {
                if (core.active && w_norm(w) <= kCoreWMax)
                  return coreR.value(w);
                return phiI(zeta);
              };
              auto gam_at = [&](const Point& zeta, const Vec& w, int k) {
                if (core.active && w_norm(w) <= kCoreWMax)
                  return coreR.grad(w, k);
                return gamI[k](zeta);
              };
              // standardized shape of the previous iterate around the source
              auto S_at = [&](const Point& zeta, const Vec& w) {
                const Vec bv = b_(dom_, r, zeta);
                const double cv = c_(dom_, r, zeta);
                if (exact0) {
                  Vec g0;
                  const double p0 = cx.narrow_kernel(din, zeta, src, &g0);
                  double num = cv * p0;
                  for (int k = 0; k < cx.d; ++k) num += bv[k] * g0[k];
                  return num / std::max(p0, 1e-300);
                }
                double sv = cv * phi_at(zeta, w);
                for (int k = 0; k < cx.d; ++k)
                  sv += bv[k] * gam_at(zeta, w, k) * sc_in;
                return sv;
              };

              if (!nout) {
                // outer kernel resolved: subtract its value at the source,
                // which needs only the zeroth moment of the concentrated
                // factor plus a stable lattice sum
                if (mode == Mode::primal || mode == Mode::data) {
                  // zeroth and first moments of F by the standardized
                  // quadrature: the subtraction below is exact through the
                  // linear term, which the drift part genuinely carries
                  double MF = 0.0;
                  double M1[kMaxDim] = {};
                  for (const auto& nd : pq.nodes) {
                    Point zeta = src;
                    for (int k = 0; k < cx.d; ++k)
                      zeta[k] += scale_in * nd.w[k];
                    zeta = dom_.wrap(zeta);
                    const Vec bv = b_(dom_, r, zeta);
                    const double cv = c_(dom_, r, zeta);
                    double node_f;
                    if (exact0) {
                      double bw = 0.0;
                      for (int k = 0; k < cx.d; ++k) bw += bv[k] * nd.wdp[k];
                      node_f = bw * sc_in + nd.wp * cv;
                    } else {
                      double gdot = 0.0;
                      for (int k = 0; k < cx.d; ++k)
                        gdot += bv[k] * gam_at(zeta, nd.w, k);
                      node_f =
                          nd.wp * (gdot * sc_in + cv * phi_at(zeta, nd.w));
                    }
                    MF += node_f;
                    for (int k = 0; k < cx.d; ++k)
                      M1[k] += node_f * scale_in * nd.w[k];
                  }
                  // F on the grid (narrow kernel values are analytic)
                  std::vector<double>& Floc = F;
                  double sbar = 0.0;
                  for (std::size_t l = 0; l < N; ++l) {
                    const Point zl = grid_.node(l);
                    if (exact0) {
                      Vec g0;
                      const double p0 = cx.narrow_kernel(din, zl, src, &g0);
                      const Vec bv = b_(dom_, r, zl);
                      double fv = c_(dom_, r, zl) * p0;
                      for (int k = 0; k < cx.d; ++k) fv += bv[k] * g0[k];
                      Floc[l] = fv;
                      sbar += grid_.weight(l) *
                              (fv / std::max(p0, 1e-300));
                    } else {
                      const Vec w = w_of(zl);
                      const double sv = S_at(zl, w);
                      Floc[l] =
                          sv * cx.narrow_kernel(din, zl, src, nullptr);
                      sbar += grid_.weight(l) * sv;
                    }
                  }
                  if (dom_.kind == DomainKind::torus)
                    MF += pq.tail_mass * sbar / dom_.total_mass();

                  const auto msrc = grid_.multi_index(cx.iy);
                  auto do_target = [&](const Point& q,
                                       const std::array<int, kMaxDim>* mi_ptr,
                                       double& vout, Vec& gout) {
                    double g0v;
                    Vec g0g{};
                    if (mi_ptr) {
                      const std::size_t pidx = tab.pair_index(*mi_ptr, msrc);
                      g0v = row_out.val[pidx];
                      for (int k = 0; k < cx.d; ++k)
                        g0g[k] = row_out.slope[pidx * kMaxDim + k] *
                                 dom_.axis_diff(q[k], src[k]);
                    } else {
                      g0v = OK.value(q, src);
                      OK.grad(q, src, g0g);
                    }
                    // grad of the outer kernel in its second argument at
                    // the source: -g0g by symmetry of the kernel
                    double acc = g0v * MF;
                    for (int k = 0; k < cx.d; ++k) acc -= g0g[k] * M1[k];
                    Vec gacc{};
                    for (int k = 0; k < cx.d; ++k) gacc[k] = g0g[k] * MF;
                    for (std::size_t l = 0; l < N; ++l) {
                      const Point zl = grid_.node(l);
                      double gv;
                      Vec gg{};
                      if (mi_ptr) {
                        const std::size_t pidx =
                            tab.pair_index(*mi_ptr, grid_.multi_index(l));
                        gv = row_out.val[pidx];
                        for (int k = 0; k < cx.d; ++k)
                          gg[k] = row_out.slope[pidx * kMaxDim + k] *
                                  dom_.axis_diff(q[k], zl[k]);
                      } else {
                        gv = OK.value(q, zl);
                        OK.grad(q, zl, gg);
                      }
                      const double wl = grid_.weight(l) * Floc[l];
                      double lin = 0.0;
                      for (int k = 0; k < cx.d; ++k)
                        lin -= g0g[k] * dom_.axis_diff(zl[k], src[k]);
                      acc += wl * (gv - g0v - lin);
                      for (int k = 0; k < cx.d; ++k)
                        gacc[k] += wl * (gg[k] - g0g[k]);
                    }
                    vout += wr * acc;
                    if (track_grad)
                      for (int k = 0; k < cx.d; ++k) gout[k] += wr * gacc[k];
                  };
                  for (std::size_t i = 0; i < N; ++i) {
                    const auto mi2 = grid_.multi_index(i);
                    do_target(grid_.node(i), &mi2, theta_new[f.idx(j, i)],
                              grad_new[f.idx(j, i)]);
                  }
                  for (std::size_t c = 0; c < NC; ++c)
                    do_target(ctarget[c], nullptr, core_new[j * NC + c],
                              core_gnew[j * NC + c]);
                } else if (mode == Mode::dual) {
                  // M of the concentrated factor (value channel only)
                  double MG = 0.0;
                  std::vector<double>& Gl = F;
                  double gbar = 0.0;
                  for (const auto& nd : pq.nodes) {
                    Point zeta = src;
                    for (int k = 0; k < cx.d; ++k)
                      zeta[k] += scale_in * nd.w[k];
                    zeta = dom_.wrap(zeta);
                    MG += exact0 ? nd.wp : nd.wp * phi_at(zeta, nd.w);
                  }
                  for (std::size_t l = 0; l < N; ++l) {
                    const Point zl = grid_.node(l);
                    const double p0 = cx.narrow_kernel(din, zl, src, nullptr);
                    const double ph =
                        exact0 ? 1.0 : phi_at(zl, w_of(zl));
                    Gl[l] = ph * p0;
                    gbar += grid_.weight(l) * ph;
                  }
                  if (dom_.kind == DomainKind::torus)
                    MG += pq.tail_mass * gbar / dom_.total_mass();
                  // target = y_i; concentrated factor sits at z = src (= x)
                  auto do_target = [&](const Point& q, double& vout) {
                    Vec gsrc{};
                    OK.grad(src, q, gsrc);
                    const Vec bsrc = b_(dom_, r, src);
                    double a0 = 0.0;
                    for (int k = 0; k < cx.d; ++k) a0 += bsrc[k] * gsrc[k];
                    double acc = a0 * MG;
                    for (std::size_t l = 0; l < N; ++l) {
                      const Point zl = grid_.node(l);
                      Vec gz{};
                      OK.grad(zl, q, gz);
                      const Vec bv = b_(dom_, r, zl);
                      double az = 0.0;
                      for (int k = 0; k < cx.d; ++k) az += bv[k] * gz[k];
                      acc += grid_.weight(l) * Gl[l] * (az - a0);
                    }
                    vout += wr * acc;
                  };
                  for (std::size_t i = 0; i < N; ++i)
                    do_target(grid_.node(i), theta_new[f.idx(j, i)]);
                  for (std::size_t c = 0; c < NC; ++c)
                    do_target(ctarget[c], core_new[j * NC + c]);
                } else {  // rewritten
                  // channel moments and lattice values of G_ch
                  double MG[1 + kMaxDim] = {};
                  for (const auto& nd : pq.nodes) {
                    Point zeta = src;
                    for (int k = 0; k < cx.d; ++k)
                      zeta[k] += scale_in * nd.w[k];
                    zeta = dom_.wrap(zeta);
                    if (exact0) {
                      MG[0] += nd.wp;
                      for (int k = 0; k < cx.d; ++k)
                        MG[1 + k] += -sc_in * nd.wdp[k];
                    } else {
                      MG[0] += nd.wp * phi_at(zeta, nd.w);
                      for (int k = 0; k < cx.d; ++k)
                        MG[1 + k] += nd.wp * gam_at(zeta, nd.w, k) * sc_in;
                    }
                  }
                  std::vector<double> G0(N), Gk[kMaxDim];
                  for (int k = 0; k < cx.d; ++k) Gk[k].resize(N);
                  double g0bar = 0.0;
                  double gkbar[kMaxDim] = {};
                  for (std::size_t l = 0; l < N; ++l) {
                    const Point zl = grid_.node(l);
                    Vec gp{};
                    const double p0 = cx.narrow_kernel(din, zl, src, &gp);
                    if (exact0) {
                      G0[l] = p0;
                      g0bar += grid_.weight(l);
                      for (int k = 0; k < cx.d; ++k) Gk[k][l] = -gp[k];
                    } else {
                      const Vec w = w_of(zl);
                      G0[l] = phi_at(zl, w) * p0;
                      g0bar += grid_.weight(l) * phi_at(zl, w);
                      for (int k = 0; k < cx.d; ++k)
                        Gk[k][l] = gam_at(zl, w, k) * sc_in * p0;
                    }
                  }
                  if (dom_.kind == DomainKind::torus) {
                    MG[0] += pq.tail_mass * g0bar / dom_.total_mass();
                  }
                  const Vec bsrc = b_(dom_, r, src);
                  const double csrc =
                      c_(dom_, r, src) - b_.divergence(dom_, r, src);
                  auto do_target = [&](const Point& q, double& vout,
                                       Vec& gout) {
                    Vec gq{};
                    OK.grad(q, src, gq);
                    double a0 = csrc * OK.value(q, src);
                    for (int k = 0; k < cx.d; ++k) a0 += bsrc[k] * gq[k];
                    double acc[1 + kMaxDim];
                    for (int ch = 0; ch < channels; ++ch)
                      acc[ch] = a0 * MG[ch];
                    for (std::size_t l = 0; l < N; ++l) {
                      const Point zl = grid_.node(l);
                      Vec gz{};
                      OK.grad(q, zl, gz);
                      const Vec bv = b_(dom_, r, zl);
                      const double ct =
                          c_(dom_, r, zl) - b_.divergence(dom_, r, zl);
                      double az = ct * OK.value(q, zl);
                      for (int k = 0; k < cx.d; ++k) az += bv[k] * gz[k];
                      const double da = az - a0;
                      const double wl = grid_.weight(l);
                      acc[0] += wl * G0[l] * da;
                      for (int k = 0; k < cx.d; ++k)
                        acc[1 + k] += wl * Gk[k][l] * da;
                    }
                    vout += wr * acc[0];
                    for (int k = 0; k < cx.d; ++k)
                      gout[k] += wr * acc[1 + k];
                  };
                  for (std::size_t i = 0; i < N; ++i)
                    do_target(grid_.node(i), theta_new[f.idx(j, i)],
                              grad_new[f.idx(j, i)]);
                  for (std::size_t c = 0; c < NC; ++c)
                    do_target(ctarget[c], core_new[j * NC + c],
                              core_gnew[j * NC + c]);
                }
                continue;
              }

              // both factors narrow, d = 1: the integrand is analytic
              // through the profile, so integrate it directly over panels
              // laddered around both concentration points
              if ((mode == Mode::primal || mode == Mode::data) && cx.d == 1) {
                const double scale_out = std::pow(dout, 1.0 / alpha);
                const GaussLegendre& gl8 = GaussLegendre::order(8);
                auto Fval = [&](const Point& zeta) {
                  const Vec bv = b_(dom_, r, zeta);
                  const double cv = c_(dom_, r, zeta);
                  if (exact0) {
                    Vec g0;
                    const double p0 = cx.narrow_kernel(din, zeta, src, &g0);
                    return cv * p0 + bv[0] * g0[0];
                  }
                  const Vec w = w_of(zeta);
                  const double p0 = cx.narrow_kernel(din, zeta, src, nullptr);
                  return (cv * phi_at(zeta, w) +
                          bv[0] * gam_at(zeta, w, 0) * sc_in) *
                         p0;
                };
                const bool torus = dom_.kind == DomainKind::torus;
                auto do_target = [&](const Point& q, double& vout,
                                     Vec& gout) {
                  double lo, hi;
                  if (torus) {
                    lo = src[0] - 0.5 * dom_.extent;
                    hi = src[0] + 0.5 * dom_.extent;
                  } else {
                    lo = std::min(q[0] - 64.0 * scale_out,
                                  src[0] - 64.0 * scale_in);
                    hi = std::max(q[0] + 64.0 * scale_out,
                                  src[0] + 64.0 * scale_in);
                  }
                  std::vector<double> cut{lo, hi};
                  auto ladder = [&](double c0, double sc) {
                    cut.push_back(c0);
                    for (double m : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
                      cut.push_back(c0 - m * sc);
                      cut.push_back(c0 + m * sc);
                    }
                  };
                  double qc = q[0];
                  if (torus) {
                    // place the target's ladder inside the window
                    qc = src[0] + dom_.axis_diff(q[0], src[0]);
                  }
                  ladder(src[0], scale_in);
                  ladder(qc, scale_out);
                  std::sort(cut.begin(), cut.end());
                  double acc = 0.0, gacc = 0.0;
                  for (std::size_t p = 0; p + 1 < cut.size(); ++p) {
                    const double a = std::max(lo, cut[p]);
                    const double b2 = std::min(hi, cut[p + 1]);
                    if (!(b2 > a)) continue;
                    for (std::size_t gq = 0; gq < gl8.nodes().size(); ++gq) {
                      const double z0 =
                          0.5 * (a + b2) + 0.5 * (b2 - a) * gl8.nodes()[gq];
                      const double gw = 0.5 * (b2 - a) * gl8.weights()[gq];
                      const Point zeta = dom_.wrap(make_point(z0));
                      const double fv = Fval(zeta);
                      if (fv == 0.0) continue;
                      Vec gp{};
                      const double pv =
                          cx.narrow_kernel(dout, q, zeta, &gp);
                      acc += gw * fv * pv;
                      gacc += gw * fv * gp[0];
                    }
                  }
                  vout += wr * acc;
                  if (track_grad) gout[0] += wr * gacc;
                };
                for (std::size_t i = 0; i < N; ++i)
                  do_target(grid_.node(i), theta_new[f.idx(j, i)],
                            grad_new[f.idx(j, i)]);
                for (std::size_t c = 0; c < NC; ++c)
                  do_target(ctarget[c], core_new[j * NC + c],
                            core_gnew[j * NC + c]);
                continue;
              }

              // both factors narrow, d = 2: bilateral split by proximity,
              // each side standardized at its own concentration point
              if (mode == Mode::primal || mode == Mode::data) {
                const double scale_out = std::pow(dout, 1.0 / alpha);
                // shared y-side closure (wrapped far tail)
                double sbar = 0.0;
                if (dom_.kind == DomainKind::torus) {
                  for (std::size_t l = 0; l < N; ++l) {
                    const Point zl = grid_.node(l);
                    sbar += grid_.weight(l) * S_at(zl, w_of(zl));
                  }
                  sbar /= dom_.total_mass();
                }
                auto do_target = [&](const Point& q, double& vout,
                                     Vec& gout) {
                  double acc = 0.0;
                  Vec gacc{};
                  // y side
                  for (const auto& nd : pq.nodes) {
                    Point zeta = src;
                    for (int k = 0; k < cx.d; ++k)
                      zeta[k] += scale_in * nd.w[k];
                    zeta = dom_.wrap(zeta);
                    if (dom_.distance(zeta, q) < dom_.distance(zeta, src))
                      continue;
                    const Vec bv = b_(dom_, r, zeta);
                    const double cv = c_(dom_, r, zeta);
                    double wgt;
                    if (exact0) {
                      double bw = 0.0;
                      for (int k = 0; k < cx.d; ++k) bw += bv[k] * nd.wdp[k];
                      wgt = bw * sc_in + nd.wp * cv;
                    } else {
                      double gdot = 0.0;
                      for (int k = 0; k < cx.d; ++k)
                        gdot += bv[k] * gam_at(zeta, nd.w, k);
                      wgt =
                          nd.wp * (gdot * sc_in + cv * phi_at(zeta, nd.w));
                    }
                    if (wgt == 0.0) continue;
                    acc += wgt * OK.value(q, zeta);
                    if (track_grad) {
                      Vec gv;
                      OK.grad(q, zeta, gv);
                      for (int k = 0; k < cx.d; ++k) gacc[k] += wgt * gv[k];
                    }
                  }
                  // x side
                  for (const auto& nd : pq.nodes) {
                    Point zeta = q;
                    for (int k = 0; k < cx.d; ++k)
                      zeta[k] += scale_out * nd.w[k];
                    zeta = dom_.wrap(zeta);
                    if (dom_.distance(zeta, q) >= dom_.distance(zeta, src))
                      continue;
                    const double fv =
                        S_at(zeta, w_of(zeta)) *
                        cx.narrow_kernel(din, zeta, src, nullptr);
                    acc += nd.wp * fv;
                    for (int k = 0; k < cx.d; ++k)
                      gacc[k] -= nd.wdp[k] * fv / scale_out;
                  }
                  if (dom_.kind == DomainKind::torus)
                    acc += sbar * pq.tail_mass;
                  vout += wr * acc;
                  if (track_grad)
                    for (int k = 0; k < cx.d; ++k) gout[k] += wr * gacc[k];
                };
                for (std::size_t i = 0; i < N; ++i)
                  do_target(grid_.node(i), theta_new[f.idx(j, i)],
                            grad_new[f.idx(j, i)]);
                for (std::size_t c = 0; c < NC; ++c)
                  do_target(ctarget[c], core_new[j * NC + c],
                            core_gnew[j * NC + c]);
                continue;
              }

              // dual / rewritten, both narrow, d = 1: direct paneled
              // integration, ladders at both concentration points
              if (cx.d == 1) {
                const double scale_out = std::pow(dout, 1.0 / alpha);
                const GaussLegendre& gl8 = GaussLegendre::order(8);
                const bool torus = dom_.kind == DomainKind::torus;
                auto integrate_target = [&](const Point& q, auto&& fval) {
                  double lo, hi;
                  double qc = q[0];
                  if (torus) {
                    lo = src[0] - 0.5 * dom_.extent;
                    hi = src[0] + 0.5 * dom_.extent;
                    qc = src[0] + dom_.axis_diff(q[0], src[0]);
                  } else {
                    lo = std::min(qc - 64.0 * scale_out,
                                  src[0] - 64.0 * scale_in);
                    hi = std::max(qc + 64.0 * scale_out,
                                  src[0] + 64.0 * scale_in);
                  }
                  std::vector<double> cut{lo, hi};
                  auto ladder = [&](double c0, double sc) {
                    cut.push_back(c0);
                    for (double m : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
                      cut.push_back(c0 - m * sc);
                      cut.push_back(c0 + m * sc);
                    }
                  };
                  ladder(src[0], scale_in);
                  ladder(qc, scale_out);
                  std::sort(cut.begin(), cut.end());
                  double acc = 0.0;
                  for (std::size_t p = 0; p + 1 < cut.size(); ++p) {
                    const double a = std::max(lo, cut[p]);
                    const double b2 = std::min(hi, cut[p + 1]);
                    if (!(b2 > a)) continue;
                    for (std::size_t gq = 0; gq < gl8.nodes().size(); ++gq) {
                      const double z0 = 0.5 * (a + b2) +
                                        0.5 * (b2 - a) * gl8.nodes()[gq];
                      const double gw =
                          0.5 * (b2 - a) * gl8.weights()[gq];
                      acc += gw * fval(dom_.wrap(make_point(z0)));
                    }
                  }
                  return acc;
                };
                if (mode == Mode::dual) {
                  auto theta_prev_at = [&](const Point& zeta) {
                    const double p0 =
                        cx.narrow_kernel(din, zeta, src, nullptr);
                    if (exact0) return p0;
                    return phi_at(zeta, w_of(zeta)) * p0;
                  };
                  for (std::size_t i = 0; i < N; ++i) {
                    const Point yi = grid_.node(i);
                    theta_new[f.idx(j, i)] +=
                        wr * integrate_target(yi, [&](const Point& zeta) {
                          Vec gz;
                          cx.narrow_kernel(dout, zeta, yi, &gz);
                          const Vec bv = b_(dom_, r, zeta);
                          return theta_prev_at(zeta) * bv[0] * gz[0];
                        });
                  }
                  for (std::size_t c = 0; c < NC; ++c) {
                    const Point yc = ctarget[c];
                    core_new[j * NC + c] +=
                        wr * integrate_target(yc, [&](const Point& zeta) {
                          Vec gz;
                          cx.narrow_kernel(dout, zeta, yc, &gz);
                          const Vec bv = b_(dom_, r, zeta);
                          return theta_prev_at(zeta) * bv[0] * gz[0];
                        });
                  }
                } else {  // rewritten
                  auto chan_prev_at = [&](const Point& zeta, int ch) {
                    if (exact0) {
                      Vec g0;
                      const double p0 =
                          cx.narrow_kernel(din, zeta, src, &g0);
                      return ch == 0 ? p0 : -g0[ch - 1];
                    }
                    const Vec w = w_of(zeta);
                    const double p0 =
                        cx.narrow_kernel(din, zeta, src, nullptr);
                    return ch == 0 ? phi_at(zeta, w) * p0
                                   : gam_at(zeta, w, ch - 1) * sc_in * p0;
                  };
                  auto outer_at = [&](const Point& q, const Point& zeta) {
                    Vec gz;
                    const double pv = cx.narrow_kernel(dout, q, zeta, &gz);
                    const Vec bv = b_(dom_, r, zeta);
                    const double ct =
                        c_(dom_, r, zeta) - b_.divergence(dom_, r, zeta);
                    // -<b, grad_z p(q,z)> = +<b, grad_q p(q,z)>
                    return ct * pv + bv[0] * gz[0];
                  };
                  auto do_target = [&](const Point& q, double& vout,
                                       Vec& gout) {
                    for (int ch = 0; ch < channels; ++ch) {
                      const double acc =
                          integrate_target(q, [&](const Point& zeta) {
                            return outer_at(q, zeta) * chan_prev_at(zeta, ch);
                          });
                      if (ch == 0)
                        vout += wr * acc;
                      else
                        gout[ch - 1] += wr * acc;
                    }
                  };
                  for (std::size_t i = 0; i < N; ++i)
                    do_target(grid_.node(i), theta_new[f.idx(j, i)],
                              grad_new[f.idx(j, i)]);
                  for (std::size_t c = 0; c < NC; ++c)
                    do_target(ctarget[c], core_new[j * NC + c],
                              core_gnew[j * NC + c]);
                }
                continue;
              }

              // dual / rewritten, both narrow, d = 2: source-centered
              for (const auto& nd : pq.nodes) {
                Point zeta = src;
                for (int k = 0; k < cx.d; ++k)
                  zeta[k] += scale_in * nd.w[k];
                zeta = dom_.wrap(zeta);
                const Vec bv = b_(dom_, r, zeta);
                if (mode == Mode::dual) {
                  const double wgt =
                      exact0 ? nd.wp : nd.wp * phi_at(zeta, nd.w);
                  if (wgt == 0.0) continue;
                  auto add_target = [&](const Point& q, double& vout) {
                    Vec gz;
                    OK.grad(zeta, q, gz);
                    double dot = 0.0;
                    for (int k = 0; k < cx.d; ++k) dot += bv[k] * gz[k];
                    vout += wr * wgt * dot;
                  };
                  for (std::size_t i = 0; i < N; ++i)
                    add_target(grid_.node(i), theta_new[f.idx(j, i)]);
                  for (std::size_t c = 0; c < NC; ++c)
                    add_target(ctarget[c], core_new[j * NC + c]);
                } else {  // rewritten
                  const double ct =
                      c_(dom_, r, zeta) - b_.divergence(dom_, r, zeta);
                  double wgt_ch[1 + kMaxDim];
                  if (exact0) {
                    wgt_ch[0] = nd.wp;
                    for (int k = 0; k < cx.d; ++k)
                      wgt_ch[1 + k] = -sc_in * nd.wdp[k];
                  } else {
                    wgt_ch[0] = nd.wp * phi_at(zeta, nd.w);
                    for (int k = 0; k < cx.d; ++k)
                      wgt_ch[1 + k] = nd.wp * gam_at(zeta, nd.w, k) * sc_in;
                  }
                  auto add_target = [&](const Point& q, double& vout,
                                        Vec& gout) {
                    Vec gv;
                    OK.grad(q, zeta, gv);
                    double A = ct * OK.value(q, zeta);
                    for (int k = 0; k < cx.d; ++k) A += bv[k] * gv[k];
                    vout += wr * wgt_ch[0] * A;
                    for (int k = 0; k < cx.d; ++k)
                      gout[k] += wr * wgt_ch[1 + k] * A;
                  };
                  for (std::size_t i = 0; i < N; ++i)
                    add_target(grid_.node(i), theta_new[f.idx(j, i)],
                               grad_new[f.idx(j, i)]);
                  for (std::size_t c = 0; c < NC; ++c)
                    add_target(ctarget[c], core_new[j * NC + c],
                               core_gnew[j * NC + c]);
                }
              }
              continue;
            }

            // resolved / narrow-out routes: previous iterate on the grid
            if (is_delta) cx.build_row(din, row_in);

            if (mode == Mode::primal || mode == Mode::data) {
              for (std::size_t l = 0; l < N; ++l) {
                const Point zl = grid_.node(l);
                double th, gth[kMaxDim];
                if (mode == Mode::data) {
                  th = prev.value(l, r);
                  for (int k = 0; k < cx.d; ++k) gth[k] = prev.grad(l, k, r);
                } else {
                  const std::size_t pidx =
                      tab.pair_index(grid_.multi_index(l), my);
                  const double pin = row_in.val[pidx];
                  if (exact0) {
                    th = pin;
                    for (int k = 0; k < cx.d; ++k)
                      gth[k] = row_in.slope[pidx * kMaxDim + k] *
                               dom_.axis_diff(zl[k], src[k]);
                  } else {
                    th = prev.value(l, r) * pin;
                    for (int k = 0; k < cx.d; ++k)
                      gth[k] = prev.grad(l, k, r) * sc_in * pin;
                  }
                }
                const Vec bv = b_(dom_, r, zl);
                double fv = c_(dom_, r, zl) * th;
                for (int k = 0; k < cx.d; ++k) fv += bv[k] * gth[k];
                F[l] = fv;
              }
              ConvIntegrator conv;
              conv.prepare(cx, dout, F.data(), nout ? nullptr : &row_out);
              for (std::size_t i = 0; i < N; ++i) {
                const std::size_t id = f.idx(j, i);
                theta_new[id] += wr * conv.value_at(i);
                if (track_grad) {
                  Vec gv;
                  conv.grad_at(i, gv);
                  for (int k = 0; k < cx.d; ++k) grad_new[id][k] += wr * gv[k];
                }
              }
              for (std::size_t c = 0; c < NC; ++c) {
                const std::size_t cid = j * NC + c;
                core_new[cid] += wr * conv.value_at_point(ctarget[c]);
                if (track_grad) {
                  Vec gv;
                  conv.grad_at_point(ctarget[c], gv);
                  for (int k = 0; k < cx.d; ++k)
                    core_gnew[cid][k] += wr * gv[k];
                }
              }
            } else if (mode == Mode::dual) {
              for (std::size_t l = 0; l < N; ++l) {
                const Point zl = grid_.node(l);
                const std::size_t pidx =
                    tab.pair_index(grid_.multi_index(l), my);
                const double pin = row_in.val[pidx];
                const double th = exact0 ? pin : prev.value(l, r) * pin;
                const Vec bv = b_(dom_, r, zl);
                for (int k = 0; k < cx.d; ++k) Fb[k][l] = th * bv[k];
              }
              for (int k = 0; k < cx.d; ++k) {
                ConvIntegrator conv;
                conv.prepare(cx, dout, Fb[k].data(), nout ? nullptr : &row_out);
                for (std::size_t i = 0; i < N; ++i) {
                  Vec gv;
                  conv.grad_at(i, gv);
                  theta_new[f.idx(j, i)] -= wr * gv[k];
                }
                for (std::size_t c = 0; c < NC; ++c) {
                  Vec gv;
                  conv.grad_at_point(ctarget[c], gv);
                  core_new[j * NC + c] -= wr * gv[k];
                }
              }
            } else {  // rewritten
              for (std::size_t l = 0; l < N; ++l) {
                const std::size_t pidx =
                    tab.pair_index(grid_.multi_index(l), my);
                const double pin = row_in.val[pidx];
                const Point zl = grid_.node(l);
                if (exact0) {
                  chanG[0 * N + l] = pin;
                  for (int k = 0; k < cx.d; ++k)
                    chanG[(1 + k) * N + l] =
                        row_in.slope[pidx * kMaxDim + k] *
                        dom_.axis_diff(src[k], zl[k]);
                } else {
                  chanG[0 * N + l] = prev.value(l, r) * pin;
                  for (int k = 0; k < cx.d; ++k)
                    chanG[(1 + k) * N + l] = prev.grad(l, k, r) * sc_in * pin;
                }
              }
              for (int ch = 0; ch < channels; ++ch) {
                const double* G = &chanG[ch * N];
                for (std::size_t l = 0; l < N; ++l) {
                  const Point zl = grid_.node(l);
                  const Vec bv = b_(dom_, r, zl);
                  const double ct =
                      c_(dom_, r, zl) - b_.divergence(dom_, r, zl);
                  Fc[l] = ct * G[l];
                  for (int k = 0; k < cx.d; ++k) Fb[k][l] = bv[k] * G[l];
                }
                ConvIntegrator convc;
                convc.prepare(cx, dout, Fc.data(), nout ? nullptr : &row_out);
                ConvIntegrator convb[kMaxDim];
                for (int k = 0; k < cx.d; ++k)
                  convb[k].prepare(cx, dout, Fb[k].data(),
                                   nout ? nullptr : &row_out);
                for (std::size_t i = 0; i < N; ++i) {
                  // -<b, grad_z p> pairs with +<b, grad_x p>
                  double acc = convc.value_at(i);
                  for (int k = 0; k < cx.d; ++k) {
                    Vec gv;
                    convb[k].grad_at(i, gv);
                    acc += gv[k];
                  }
                  const std::size_t id = f.idx(j, i);
                  if (ch == 0)
                    theta_new[id] += wr * acc;
                  else
                    grad_new[id][ch - 1] += wr * acc;
                }
                for (std::size_t c = 0; c < NC; ++c) {
                  double acc = convc.value_at_point(ctarget[c]);
                  for (int k = 0; k < cx.d; ++k) {
                    Vec gv;
                    convb[k].grad_at_point(ctarget[c], gv);
                    acc += gv[k];
                  }
                  const std::size_t cid = j * NC + c;
                  if (ch == 0)
                    core_new[cid] += wr * acc;
                  else
                    core_gnew[cid][ch - 1] += wr * acc;
                }
              }
            }
          }
        }
      },
      cfg_.parallel);

  IterStats st;
  for (std::size_t j = 0; j < J; ++j) {
    const double gdt = std::pow(f.times[j] - f.s, 1.0 / alpha);
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t id = f.idx(j, i);
      const double ref = is_delta ? f.p_ref[id] : f.norm_scale;
      if (!(ref > 0.0)) continue;
      st.norm_theta = std::max(st.norm_theta, std::abs(theta_new[id]) / ref);
      if (track_grad) {
        double gn = 0.0;
        for (int k = 0; k < cx.d; ++k)
          gn += grad_new[id][k] * grad_new[id][k];
        gn = std::sqrt(gn) * (is_delta ? gdt : 1.0);
        st.norm_grad = std::max(st.norm_grad, gn / ref);
      }
    }
  }
  const double prev_norm = f.history.back().norm_theta;
  st.ratio = prev_norm > 0.0 ? st.norm_theta / prev_norm : 0.0;
  f.history.push_back(st);
  f.theta_val = std::move(theta_new);
  f.theta_grad = std::move(grad_new);
  f.core_val = std::move(core_new);
  f.core_grad = std::move(core_gnew);
  const std::size_t total = J * N;
  for (std::size_t id = 0; id < total; ++id) {
    f.sum_val[id] += f.theta_val[id];
    for (int k = 0; k < cx.d; ++k) f.sum_grad[id][k] += f.theta_grad[id][k];
  }
}

KernelField PicardSolver::run_window(Mode mode, double s, const Point& y,
                                     const InitialData* v,
                                     double t_max) const {
  KernelField f;
  f.s = s;
  f.y = mode == Mode::data ? Point{} : grid_.node(grid_.nearest(y));
  f.delta_source = mode != Mode::data;
  f.alpha = kernel_.alpha();
  f.times = Grid::graded_times(s, t_max, cfg_.grid.time_slices);
  f.window_used = t_max - s;
  init_theta0(mode, f, v);
  if (b_.is_zero() && c_.is_zero() && mode != Mode::rewritten) {
    f.converged = true;
    return f;
  }
  for (int n = 1; n <= cfg_.max_iterations; ++n) {
    step(mode, n, f);
    if (f.history.back().norm_theta < cfg_.tol) {
      f.converged = true;
      break;
    }
  }
  return f;
}

KernelField PicardSolver::run(Mode mode, double s, const Point& y,
                              const InitialData* v, double t_max) const {
  double window = std::min(cfg_.window, t_max - s);
  if (cfg_.auto_window && mode != Mode::data) {
    for (int trial = 0; trial < 6; ++trial) {
      KernelField probe;
      probe.s = s;
      probe.y = grid_.node(grid_.nearest(y));
      probe.delta_source = true;
      probe.alpha = kernel_.alpha();
      probe.times = Grid::graded_times(s, s + window, cfg_.grid.time_slices);
      init_theta0(mode, probe, nullptr);
      step(mode, 1, probe);
      if (probe.history.back().norm_theta <= cfg_.smallness_target) break;
      window *= 0.5;
    }
  }
  if (window >= t_max - s - 1e-14) return run_window(mode, s, y, v, t_max);

  const int n_win = static_cast<int>(std::ceil((t_max - s) / window));
  const double step_len = (t_max - s) / n_win;
  KernelField total = run_window(mode, s, y, v, s + step_len);
  const std::size_t N = grid_.size();
  for (int w = 1; w < n_win; ++w) {
    const double s_w = s + w * step_len;
    const std::size_t last = total.times.size() - 1;
    std::vector<double> vv(N);
    std::vector<Vec> vgr(N);
    for (std::size_t i = 0; i < N; ++i) {
      vv[i] = total.sum_val[total.idx(last, i)];
      vgr[i] = total.sum_grad[total.idx(last, i)];
    }
    GridInterp vi{&grid_, vv.data()};
    std::vector<double> comp[kMaxDim];
    for (int k = 0; k < dom_.d; ++k) {
      comp[k].resize(N);
      for (std::size_t i = 0; i < N; ++i) comp[k][i] = vgr[i][k];
    }
    GridInterp gi0{&grid_, comp[0].data()};
    GridInterp gi1{&grid_, dom_.d > 1 ? comp[1].data() : comp[0].data()};
    const int dd = dom_.d;
    InitialData next;
    next.value = [vi](const Point& p) { return vi(p); };
    next.gradient = [gi0, gi1, dd](const Point& p) {
      Vec g{};
      g[0] = gi0(p);
      if (dd > 1) g[1] = gi1(p);
      return g;
    };
    KernelField piece = run_window(Mode::data, s_w, y, &next, s_w + step_len);
    for (std::size_t j = 0; j < piece.times.size(); ++j) {
      total.times.push_back(piece.times[j]);
      for (std::size_t i = 0; i < N; ++i) {
        total.sum_val.push_back(piece.sum_val[piece.idx(j, i)]);
        total.sum_grad.push_back(piece.sum_grad[piece.idx(j, i)]);
        total.theta_val.push_back(piece.theta_val[piece.idx(j, i)]);
        total.theta_grad.push_back(piece.theta_grad[piece.idx(j, i)]);
        total.p_ref.push_back(1.0);
      }
    }
    for (const auto& st : piece.history) total.history.push_back(st);
    total.converged = total.converged && piece.converged;
  }
  if (mode != Mode::data) {
    DeltaTable tab;
    tab.init(grid_);
    ProfileQuad pq;
    pq.build(profile_, 12);
    Ctx cx = make_ctx(*this, tab, pq, total);
    const auto my = grid_.multi_index(cx.iy);
    for (std::size_t j = 0; j < total.times.size(); ++j) {
      KernelRow row;
      cx.build_row(total.times[j] - s, row);
      for (std::size_t i = 0; i < N; ++i)
        total.p_ref[total.idx(j, i)] =
            row.val[tab.pair_index(grid_.multi_index(i), my)];
    }
  }
  total.window_used = step_len;
  return total;
}

KernelField PicardSolver::solve_delta(double s, const Point& y,
                                      double t_max) const {
  return run(Mode::primal, s, y, nullptr, t_max);
}

KernelField PicardSolver::solve_data(double s, const InitialData& v,
                                     double t_max) const {
  return run(Mode::data, s, Point{}, &v, t_max);
}

KernelField PicardSolver::dual_solve(const Point& x, double t_max) const {
  if (!b_.time_independent() || !c_.is_zero())
    throw std::invalid_argument(
        "dual_solve: needs time-independent drift and c = 0");
  return run(Mode::dual, 0.0, x, nullptr, t_max);
}

KernelField PicardSolver::solve_delta_rewritten(double s, const Point& y,
                                                double t_max) const {
  return run(Mode::rewritten, s, y, nullptr, t_max);
}

std::vector<double> PicardSolver::apply_free_semigroup(
    double tau, const std::vector<double>& v) const {
  DeltaTable tab;
  tab.init(grid_);
  ProfileQuad pq;
  pq.build(profile_, 12);
  KernelField dummy;
  dummy.s = 0.0;
  Ctx cx = make_ctx(*this, tab, pq, dummy);
  const bool narrow =
      std::pow(tau, 1.0 / cx.alpha) < cfg_.narrow_factor * cx.h;
  KernelRow row;
  if (!narrow) cx.build_row(tau, row);
  ConvIntegrator conv;
  conv.prepare(cx, tau, v.data(), narrow ? nullptr : &row);
  std::vector<double> out(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = conv.value_at(i);
  return out;
}

PicardSolver::A1A2 PicardSolver::bound_report(const KernelField& f) const {
  const XiProfile xi = kernel_.xi_profile();
  A1A2 rep;
  rep.a1_low = std::numeric_limits<double>::infinity();
  const std::size_t N = f.n_nodes;
  const Point y = f.y;
  for (std::size_t j = 0; j < f.times.size(); ++j) {
    const double dt = f.times[j] - f.s;
    const double gdt = std::pow(dt, 1.0 / kernel_.alpha());
    for (std::size_t i = 0; i < N; ++i) {
      const double x = xi.xi(dt, dom_.distance(grid_.node(i), y));
      const std::size_t id = f.idx(j, i);
      const double ratio = f.sum_val[id] / x;
      rep.a1_low = std::min(rep.a1_low, ratio);
      rep.a1_high = std::max(rep.a1_high, ratio);
      double gn = 0.0;
      for (int k = 0; k < dom_.d; ++k)
        gn += f.sum_grad[id][k] * f.sum_grad[id][k];
      rep.a2 = std::max(rep.a2, std::sqrt(gn) * gdt / x);
    }
  }
  return rep;
}

double PicardSolver::chapman_kolmogorov_residual(const KernelField& f,
                                                 double r_mid) const {
  std::size_t jr = 0;
  for (std::size_t j = 0; j < f.times.size(); ++j)
    if (std::abs(f.times[j] - r_mid) < std::abs(f.times[jr] - r_mid)) jr = j;
  const double r = f.times[jr];
  const double T = f.times.back();
  const std::size_t N = f.n_nodes;
  std::vector<double> vv(N);
  std::vector<Vec> vgr(N);
  for (std::size_t i = 0; i < N; ++i) {
    vv[i] = f.sum_val[f.idx(jr, i)];
    vgr[i] = f.sum_grad[f.idx(jr, i)];
  }
  GridInterp vi{&grid_, vv.data()};
  std::vector<double> comp[kMaxDim];
  for (int k = 0; k < dom_.d; ++k) {
    comp[k].resize(N);
    for (std::size_t i = 0; i < N; ++i) comp[k][i] = vgr[i][k];
  }
  const int dd = dom_.d;
  GridInterp gi0{&grid_, comp[0].data()};
  GridInterp gi1{&grid_, dd > 1 ? comp[1].data() : comp[0].data()};
  InitialData v;
  v.value = [vi](const Point& p) { return vi(p); };
  v.gradient = [gi0, gi1, dd](const Point& p) {
    Vec g{};
    g[0] = gi0(p);
    if (dd > 1) g[1] = gi1(p);
    return g;
  };
  KernelField u = run_window(Mode::data, r, Point{}, &v, T);
  const std::size_t last = u.times.size() - 1;
  const std::size_t jlast = f.times.size() - 1;
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double diff =
        std::abs(u.sum_val[u.idx(last, i)] - f.sum_val[f.idx(jlast, i)]);
    const double ref =
        kernel_.eval(T - f.s, grid_.node(i), f.y, 0, cfg_.clock_level).value;
    worst = std::max(worst, diff / std::max(ref, 1e-300));
  }
  return worst;
}

double PicardSolver::holder_gradient_report(const KernelField& f, double beta,
                                            int max_pairs) const {
  const std::size_t N = f.n_nodes;
  const std::size_t j = f.times.size() - 1;
  const double dt = f.times[j] - f.s;
  const double alpha = kernel_.alpha();
  double worst = 0.0;
  int used = 0;
  const std::size_t stride = std::max<std::size_t>(1, N * N / max_pairs);
  for (std::size_t q = 0; q < N * N && used < max_pairs; q += stride, ++used) {
    const std::size_t i = q / N, i2 = q % N;
    if (i == i2) continue;
    const Point xa = grid_.node(i), xb = grid_.node(i2);
    const double rho = dom_.distance(xa, xb);
    if (!(rho > 0.0)) continue;
    double dg = 0.0;
    for (int k = 0; k < dom_.d; ++k) {
      const double dgi =
          f.sum_grad[f.idx(j, i)][k] - f.sum_grad[f.idx(j, i2)][k];
      dg += dgi * dgi;
    }
    dg = std::sqrt(dg);
    const double et = reports_eta_local(*this, dt, xa, xb, f.y);
    const double val = dg * std::pow(std::min(1.0, dt), beta / alpha) /
                       (std::pow(rho, beta - 1.0) * et);
    worst = std::max(worst, val);
  }
  return worst;
}

PicardSolver::GeneratorTable PicardSolver::generator_weak_check(
    double s, const ScalarField& phi, const ScalarField& psi,
    const std::vector<double>& dts, double tau0) const {
  const std::size_t N = grid_.size();
  std::vector<double> phig(N), psig(N);
  for (std::size_t i = 0; i < N; ++i) {
    phig[i] = phi(dom_, 0.0, grid_.node(i));
    psig[i] = psi(dom_, 0.0, grid_.node(i));
  }
  auto D = [&](double tau) {
    std::vector<double> u = apply_free_semigroup(tau, phig);
    for (std::size_t i = 0; i < N; ++i) u[i] = (u[i] - phig[i]) / tau;
    return u;
  };
  const std::vector<double> d1 = D(tau0), d2 = D(0.5 * tau0),
                            d4 = D(0.25 * tau0);
  std::vector<double> Lphi(N);
  for (std::size_t i = 0; i < N; ++i)
    Lphi[i] = (8.0 * d4[i] - 6.0 * d2[i] + d1[i]) / 3.0;

  double target = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const Point z = grid_.node(i);
    const Vec bv = b_(dom_, s, z);
    Vec gphi = phi.spatial_gradient(dom_, z);
    const double tp = phi.time_profile()(0.0);
    double term = Lphi[i] + c_(dom_, s, z) * phig[i];
    for (int k = 0; k < dom_.d; ++k) term += bv[k] * gphi[k] * tp;
    target += grid_.weight(i) * psig[i] * term;
  }

  InitialData v;
  v.value = [&](const Point& p) { return phi(dom_, 0.0, p); };
  v.gradient = [&](const Point& p) { return phi.spatial_gradient(dom_, p); };

  GeneratorTable table;
  table.scale = std::abs(target);
  for (double dt : dts) {
    KernelField u = run_window(Mode::data, s, Point{}, &v, s + dt);
    const std::size_t last = u.times.size() - 1;
    double lhs = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      lhs +=
          grid_.weight(i) * psig[i] * (u.sum_val[u.idx(last, i)] - phig[i]);
    lhs /= dt;
    table.dt.push_back(dt);
    table.residual.push_back(std::abs(lhs - target));
  }
  return table;
}

double reports_eta_local(const PicardSolver& S, double t, const Point& x,
                         const Point& x2, const Point& y) {
  const auto& k = S.kernel();
  const auto& dom = S.grid().domain();
  const GaussLegendre& rule = GaussLegendre::order(16);
  const double pa = k.eval(t, x, y, 0).value;
  const double pb = k.eval(t, x2, y, 0).value;
  const double avg = rule.integrate(
      [&](double th) {
        return k.eval(t, dom.geodesic_point(x, x2, th), y, 0).value;
      },
      0.0, 1.0);
  return pa + pb + avg;
}

std::vector<double> picard_step_value_reference(const PicardSolver& solver,
                                                const KernelField& f,
                                                int ts_level) {
  const Grid& grid = solver.grid();
  const Domain& dom = grid.domain();
  const FracKernel& K = solver.kernel();
  const std::size_t N = grid.size();
  const std::size_t J = f.times.size();
  std::vector<double> out(J * N, 0.0);
  const TanhSinh& ts = TanhSinh::instance();
  for (std::size_t j = 0; j < J; ++j) {
    const double T = f.times[j];
    for (std::size_t i = 0; i < N; ++i) {
      const Point xi = grid.node(i);
      auto W = [&](double r) {
        double acc = 0.0;
        for (std::size_t l = 0; l < N; ++l) {
          const Point zl = grid.node(l);
          const auto in = K.eval(r - f.s, zl, f.y, 1);
          const Vec bv = solver.drift()(dom, r, zl);
          double fv = solver.potential()(dom, r, zl) * in.value;
          for (int k = 0; k < dom.d; ++k) fv += bv[k] * in.grad[k];
          acc += grid.weight(l) * K.eval(T - r, xi, zl, 0).value * fv;
        }
        return acc;
      };
      const double mid = 0.5 * (f.s + T);
      out[f.idx(j, i)] = ts.integrate(W, f.s, mid, ts_level).value +
                         ts.integrate(W, mid, T, ts_level).value;
    }
  }
  return out;
}

}  // namespace fracheat
