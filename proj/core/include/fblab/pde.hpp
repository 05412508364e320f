#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"

namespace fblab::pde {

using SpaceFn = std::function<double(const std::vector<double>&, double)>;
using CoeffFn = std::function<Eigen::MatrixXd(const std::vector<double>&, double)>;

// Data for the flat-interface transmission problem
//
//   a_plus  v_t - a_ij(x,t) D_ij v = rhs_plus   where x_n > 0,
//   a_minus v_t - a_ij(x,t) D_ij v = rhs_minus  where x_n < 0,
//
// with continuous value and normal derivative across {x_n = 0}.  The last
// spatial coordinate is the distinguished one.  Empty coeff_field means the
// identity matrix; empty rhs functions mean zero.  ell_lo/ell_hi declare the
// ellipticity window of coeff_field; samples are checked against it.
struct TransmissionSpec {
  double a_plus = 1.0;
  double a_minus = 1.0;
  double ell_lo = 1.0;
  double ell_hi = 1.0;
  CoeffFn coeff_field;
  SpaceFn rhs_plus;
  SpaceFn rhs_minus;
};

// Parameters of the smoothed time-derivative coefficient: a_minus for
// s < -width, a_plus for s > width, one C^2 monotone ramp in between.
struct RegularizedCoefficient {
  double a_plus = 1.0;
  double a_minus = 1.0;
  double width = 0.1;
};

// The 0 -> 1 transition profile used by the regularized coefficient: 0 for
// s <= -width, 1 for s >= width, quintic in between, twice continuously
// differentiable everywhere.
double regularized_ramp(double s, double width);

// Returns s -> a(s) for the given plateau values and width.
// a(0) is the midpoint of the plateaus and a stays inside their hull.
std::function<double(double)> regularized_coefficient(const RegularizedCoefficient& spec);

// Quadratic-in-space, linear-in-time polynomial whose Hessian may jump in
// the nn entry across {x_n = 0}:  P(x,t) = x'A(x_n)x/2 + b.x + c t + d.
// Value and normal derivative match automatically across the interface.
struct PiecewiseQuadratic {
  Eigen::MatrixXd A_plus, A_minus;
  Eigen::VectorXd b;
  double c = 0.0;
  double d = 0.0;

  // Throws argument_error unless both matrices are symmetric, the sizes all
  // agree, and the matrices differ at most in the nn corner.
  void validate() const;
};

double piecewise_quadratic_eval(const PiecewiseQuadratic& P,
                                const std::vector<double>& x, double t);

// Pucci extremal operators over the ellipticity class [lambda, Lambda]:
// the minimal one weights positive eigenvalues by lambda and negative ones
// by Lambda; the maximal one mirrors that.  Throws argument_error for a
// non-symmetric matrix or an invalid window.
double pucci_minus(const Eigen::MatrixXd& M, double lambda, double Lambda);
double pucci_plus(const Eigen::MatrixXd& M, double lambda, double Lambda);

// Checks the extremal-operator sandwich
//
//   funder + M^-(D^2 w)  <=  w_t  <=  M^+(D^2 w) + fbar
//
// at every interior node of the field outside a band of two spatial steps
// around {x_n = 0}, with lambda = ell_lo / max(a_plus, a_minus) and
// Lambda = ell_hi / min(a_plus, a_minus).  Time derivative is the backward
// difference, matching the implicit scheme.  Returns the largest violation,
// so a value <= 0 means the sandwich holds everywhere checked.
double pucci_sandwich_check(const GridField& field, const TransmissionSpec& spec,
                            const SpaceFn& fbar, const SpaceFn& funder);

// Axis-aligned space-time slab for the solvers.
struct SpaceTimeBox {
  std::vector<double> lo, hi;
  double t0 = 0.0;
  double t1 = 1.0;
};

// Cell counts: nodes per axis are space[i] + 1, time levels are time + 1.
struct SolveSteps {
  std::vector<int> space;
  int time = 1;
};

struct StepLogEntry {
  int step = 0;
  double residual = 0.0;
  double seconds = 0.0;
};

// Implicit (backward Euler) solver for the regularized transmission problem
//
//   a_reg(x_n) w_t - a_ij(x,t) D_ij w = f_reg(x_n; x, t)
//
// on the box, with boundary_data supplying the initial slab and the lateral
// values.  Second-order centered stencils in space; each step's linear
// system is solved to residual 1e-10 (sup norm, relative to the load).
// Supports one and two spatial dimensions; the interface sits at zero in
// the last coordinate.  Throws argument_error when a coefficient sample
// leaves the declared ellipticity window and numeric_error when a linear
// solve stalls.  When every right-hand-side sample is zero and the stencil
// is of monotone type, the discrete maximum principle is asserted on the
// result.
GridField solve_linear_transmission(const TransmissionSpec& spec,
                                    const SpaceTimeBox& domain,
                                    const SpaceFn& boundary_data,
                                    const SolveSteps& steps, double reg_width,
                                    std::vector<StepLogEntry>* log = nullptr);

enum class Geometry { cartesian1d, radial1d, cartesian2d };

struct NonlinearOptions {
  Geometry geometry = Geometry::cartesian1d;
  // Ambient dimension n for the radial Laplacian u_rr + (n-1)/r u_r.
  int radial_n = 3;
  // Lagged-coefficient sweeps per time step and their stopping tolerance.
  int max_coefficient_iters = 50;
  double coefficient_tol = 1e-10;
};

// Implicit solver for the two-phase equation a(u) u_t = Laplacian(u) with
// a(u) regularized by `reg_width`.  Each backward-Euler step freezes the
// coefficient at the previous iterate and re-solves until the iterates
// stop moving; non-convergence within the sweep cap raises numeric_error
// carrying the residual history.  initial_and_boundary supplies the t0
// slab and the lateral data.  Radial geometry expects lo = {0} and applies
// the symmetry condition at r = 0 (where the Laplacian degenerates to
// n * u_rr); only r = r_max carries boundary data.
GridField solve_nonlinear(double a_plus, double a_minus,
                          const SpaceTimeBox& domain,
                          const SpaceFn& initial_and_boundary,
                          const SolveSteps& steps, double reg_width,
                          const NonlinearOptions& opts = {},
                          std::vector<StepLogEntry>* log = nullptr);

}  // namespace fblab::pde
