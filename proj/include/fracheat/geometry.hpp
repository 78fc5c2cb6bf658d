#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

namespace fracheat {

constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;
using Vec = std::array<double, kMaxDim>;

inline Point make_point(double x0, double x1 = 0.0, double x2 = 0.0) {
  return {x0, x1, x2};
}

enum class DomainKind { euclidean_box, torus };

// Flat geometry carrying distance, geodesics, balls and the reference
// measure. The Euclidean box is an infinite-measure space whose integrals
// are truncated at [-R, R]^d; consumers account for the far field
// analytically. The torus has period Lp per axis and finite mass Lp^d.
struct Domain {
  DomainKind kind = DomainKind::torus;
  int d = 1;
  double extent = 1.0;  // half-width R (box) or period Lp (torus)

  bool finite_mass() const { return kind == DomainKind::torus; }
  double total_mass() const;  // Lp^d, or +inf for the box

  // Signed per-axis difference a-b, wrapped to (-Lp/2, Lp/2] on the torus.
  // The antipodal tie |delta| = Lp/2 resolves to +Lp/2.
  double axis_diff(double a, double b) const;

  double distance(const Point& x, const Point& y) const;
  Point geodesic_point(const Point& x, const Point& y, double theta) const;
  double measure_ball(const Point& x, double r) const;

  // Largest possible distance (box diameter / torus half-diagonal).
  double max_distance() const;

  Point wrap(const Point& x) const;  // canonical representative on the torus
};

double unit_ball_volume(int d);

struct GridSpec {
  int nodes_per_axis = 64;
  int time_slices = 16;
  double far_field_cut = 0.0;  // 0: use the box edge

  void validate() const;  // throws on nodes < 3 or slices < 2
};

// Tensor quadrature grid over the domain. Torus: equally weighted periodic
// trapezoid nodes at cell centers offset 0, i.e. x_i = i*h. Box: closed
// uniform nodes with composite Newton-Cotes weights.
class Grid {
 public:
  Grid() = default;
  Grid(const Domain& dom, const GridSpec& spec);

  const Domain& domain() const { return dom_; }
  int nodes_per_axis() const { return n_; }
  std::size_t size() const { return total_; }
  double spacing() const { return h_; }

  const std::vector<double>& axis_nodes() const { return axis_x_; }
  const std::vector<double>& axis_weights() const { return axis_w_; }

  Point node(std::size_t idx) const;
  double weight(std::size_t idx) const;
  std::array<int, kMaxDim> multi_index(std::size_t idx) const;
  std::size_t flat_index(const std::array<int, kMaxDim>& mi) const;

  // Nearest grid node to a point.
  std::size_t nearest(const Point& x) const;

  // Time nodes on (a, b], graded toward both endpoints.
  static std::vector<double> graded_times(double a, double b, int slices);

 private:
  Domain dom_;
  int n_ = 0;
  std::size_t total_ = 0;
  double h_ = 0.0;
  std::vector<double> axis_x_, axis_w_;
};

}  // namespace fracheat
