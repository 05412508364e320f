#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fblab/geometry.hpp"
#include "fblab/pde.hpp"

namespace fblab::hodograph {

// Result of straightening a monotone solution patch: the partial hodograph
// h(y', y_n, t) = x_n determined by u(x', h, t) = y_n.  The source field is
// the (possibly window-restricted) patch that was inverted, so tangential
// and time indices of the two grids align one to one.
struct HodographPatch {
  GridField source;
  GridField h;
  double lambda = 0.0;      // requested monotonicity floor, in (0, 1/2)
  double lambda_bar = 0.0;  // measured sup of the one-sided u_n on the patch
  // Row of the y_n axis pinned to exactly 0 when 0 lies inside the shared
  // value range, -1 otherwise.
  int interface_index = -1;
};

// Inverts u along the last axis by piecewise-linear interpolation onto a
// uniform y_n grid spanning the intersection of the per-column value
// ranges.  Every column must rise by at least lambda per unit length
// between consecutive nodes; violations throw an argument_error naming the
// offending columns.  The node count along y_n matches the source's last
// axis.
HodographPatch forward_transform(const GridField& field, double lambda);

// Same, restricted to the grid nodes inside an axis-aligned space-time box.
HodographPatch forward_transform(const GridField& field, const pde::SpaceTimeBox& window,
                                 double lambda);

struct DerivativeResiduals {
  double time = 0.0;      // max |u_t + h_t / h_n|
  double gradient = 0.0;  // max over components of |grad u + (grad' h, -1) / h_n|
};

// Checks the chain-rule identities u_t = -h_t/h_n and
// grad u = -(grad' h, -1)/h_n at interior image nodes, evaluating the
// u side by centered differences at the nearest source node of x_n = h(y).
// The nearest-node alignment costs O(h), which dominates the report on
// curved patches; linear fixtures come out at rounding level.
DerivativeResiduals derivative_identity_check(const HodographPatch& patch);

// Coefficient matrix of the transformed equation.
struct HodographCoefficients {
  std::vector<double> p;
  Eigen::MatrixXd B;
};

// B(p) = A(p)^T A(p) in closed form: identity plus p_i p_j / p_n^2 on the
// tangential block, -p_i / p_n^2 in the last column and row, 1 / p_n^2 in
// the corner.  The closed form is cross-checked against an explicit
// A^T A product to 1e-14.  p_n = 0 is rejected.
HodographCoefficients coefficient_matrix(const std::vector<double>& p);

struct TransmissionReport {
  double residual_plus = 0.0;   // max |a_plus h_t - b_ij(grad h) D_ij h|, y_n > 0
  double residual_minus = 0.0;  // same below the interface
  double interface_jump = 0.0;  // max over the interface of |h_n^+ - h_n^-|
};

// Residuals of the two branch equations a h_t = b_ij(grad h) D_ij h by
// centered differences on the image grid, skipping the interface row; the
// one-sided three-point h_n stencils at y_n = 0 never cross a branch.
// Needs the interface row at least two cells inside the patch.
TransmissionReport transmission_residual(const HodographPatch& patch, double a_plus,
                                         double a_minus);

}  // namespace fblab::hodograph
