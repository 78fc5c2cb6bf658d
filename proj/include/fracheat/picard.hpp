#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fracheat/frac_kernel.hpp"
#include "fracheat/functions.hpp"
#include "fracheat/geometry.hpp"
#include "fracheat/stable_profile.hpp"

namespace fracheat {

struct SolveConfig {
  double window = 0.5;  // requested horizon t_max - s (glued if larger)
  double tol = 1e-6;    // stop when the weighted norm of Theta_n drops below
  int max_iterations = 12;
  double smallness_target = 1.0 / 3.0;  // first contraction ratio bound
  GridSpec grid{64, 16, 0.0};
  int clock_level = 4;        // pointwise kernel evaluations
  int row_clock_level = 3;    // kernel rows inside the iteration
  int time_gl = 16;           // nodes per half of the r-integral
  double narrow_factor = 3.0; // narrow regime when Delta^{1/a} < factor * h
  bool parallel = true;
  bool auto_window = false;   // bisect the window until the target holds
};

struct IterStats {
  double norm_theta = 0.0;  // sup |Theta_n| / p^(a)
  double norm_grad = 0.0;   // sup |grad Theta_n| (r-s)^{1/a} / p^(a)
  double ratio = 0.0;       // norm_theta vs previous
};

// Time-sliced field of the running Picard sums for one source. In delta
// mode the gradient slots hold grad_x (or grad_y for the rewritten
// iteration); in data mode they hold the gradient of the evolved function.
struct KernelField {
  double s = 0.0;
  Point y{};
  bool delta_source = true;
  std::vector<double> times;  // slice times in (s, t_max]
  std::size_t n_nodes = 0;
  std::vector<double> sum_val, theta_val;   // [slice * N + node]
  std::vector<Vec> sum_grad, theta_grad;
  std::vector<double> p_ref;  // p^(a)(r_j - s, z_i, y) for the norms (delta)
  std::vector<double> anchor_val;  // data mode: v at nodes
  std::vector<Vec> anchor_grad;    // data mode: grad v at nodes
  double norm_scale = 1.0;         // data mode: sup |theta_0|

  // auxiliary core lattice around the source at standardized offsets
  // w * (r_j - s)^{1/a}: the iterate's ratio to p^(a) varies below grid
  // resolution there at small r, so it is tracked separately (delta modes)
  double alpha = 1.5;
  std::vector<Vec> core_w;                 // standardized offset vectors
  std::vector<double> core_val, core_ref;  // [slice * n_core + c]
  std::vector<Vec> core_grad;
  std::size_t n_core = 0;
  Point core_point(std::size_t slice, std::size_t c, const Domain& dom) const;

  std::vector<IterStats> history;
  bool converged = false;
  double window_used = 0.0;

  std::size_t idx(std::size_t slice, std::size_t node) const {
    return slice * n_nodes + node;
  }
  double value(std::size_t slice, std::size_t node) const {
    return sum_val[idx(slice, node)];
  }
  const Vec& gradient(std::size_t slice, std::size_t node) const {
    return sum_grad[idx(slice, node)];
  }
};

// Smooth initial data for the data-mode solve.
struct InitialData {
  std::function<double(const Point&)> value;
  std::function<Vec(const Point&)> gradient;  // optional; null -> finite diff
};

class PicardSolver {
 public:
  PicardSolver(const Domain& dom, std::shared_ptr<const Subordinator> sub,
               DriftField b, ScalarField c, SolveConfig cfg);

  const Grid& grid() const { return grid_; }
  const FracKernel& kernel() const { return kernel_; }
  const StableProfile& profile() const { return profile_; }
  const SolveConfig& config() const { return cfg_; }
  const DriftField& drift() const { return b_; }
  const ScalarField& potential() const { return c_; }

  // kernel column p_{b,c}(t, ., s, y) built by the primal iteration (1.6);
  // y snaps to the nearest grid node. Long horizons are glued by restarting
  // from the terminal slice.
  KernelField solve_delta(double s, const Point& y, double t_max) const;

  // action of the evolution on initial data v given at time s
  KernelField solve_data(double s, const InitialData& v, double t_max) const;

  // dual construction: the kernel as a function of its second argument at a
  // fixed first argument x (time-independent drift, c = 0)
  KernelField dual_solve(const Point& x, double t_max) const;

  // divergence-rewritten iteration tracking the source gradient; the
  // gradient slots of the result hold grad_y
  KernelField solve_delta_rewritten(double s, const Point& y,
                                    double t_max) const;

  // P^(a)_tau v on the grid (plain subordinated convolution)
  std::vector<double> apply_free_semigroup(double tau,
                                           const std::vector<double>& v) const;

  struct A1A2 {
    double a1_low = 0.0, a1_high = 0.0, a2 = 0.0;
  };
  A1A2 bound_report(const KernelField& f) const;

  // max over grid of |P_{t,r} field(r) - field(t)| / p^(a)(t-s, rho(x,y)),
  // gluing through the slice nearest to r_mid
  double chapman_kolmogorov_residual(const KernelField& f, double r_mid) const;

  // sup over node pairs (x, x') at the terminal slice of the Holder-gradient
  // ratio of Theorem 1.2
  double holder_gradient_report(const KernelField& f, double beta,
                                int max_pairs = 4096) const;

  struct GeneratorTable {
    std::vector<double> dt;
    std::vector<double> residual;
    double scale = 0.0;  // |int psi L phi + <b, grad phi> + c phi|
  };
  GeneratorTable generator_weak_check(double s, const ScalarField& phi,
                                      const ScalarField& psi,
                                      const std::vector<double>& dts,
                                      double tau0 = 0.08) const;

 private:
  struct StepScratch;
  enum class Mode { primal, dual, rewritten, data };

  KernelField run(Mode mode, double s, const Point& y, const InitialData* v,
                  double t_max) const;
  KernelField run_window(Mode mode, double s, const Point& y,
                         const InitialData* v, double t_max) const;
  void init_theta0(Mode mode, KernelField& f, const InitialData* v) const;
  void step(Mode mode, int n, KernelField& f) const;

  Domain dom_;
  Grid grid_;
  FracKernel kernel_;
  StableProfile profile_;
  DriftField b_;
  ScalarField c_;
  SolveConfig cfg_;
};

// Straightforward reference step used by the tests: direct nested loops,
// plain tanh-sinh time integral and plain grid sums, no caches, no narrow
// handling. Valid on well-resolved configurations only.
std::vector<double> picard_step_value_reference(
    const PicardSolver& solver, const KernelField& f, int ts_level = 5);

}  // namespace fracheat
