#pragma once

// Analytic fixtures shared between the unit suites and the acceptance run.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fblab/pde.hpp"

namespace fixtures {

// Exact two-phase solution with a static interface at x = 0:
//
//   u(x, t) = amp_plus  * erf(x sqrt(a_plus)  / (2 sqrt(t + t_shift)))  x >= 0
//   u(x, t) = amp_minus * erf(x sqrt(a_minus) / (2 sqrt(t + t_shift)))  x < 0
//
// Each branch solves a u_t = u_xx exactly, the value is continuous, and the
// slopes match at zero because amp_plus sqrt(a_plus) = amp_minus sqrt(a_minus).
struct TwoPhaseErf {
  double a_plus = 1.0;
  double a_minus = 0.25;
  double amp_plus = 0.1;
  double t_shift = 0.25;

  double amp_minus() const { return amp_plus * std::sqrt(a_plus / a_minus); }

  double operator()(double x, double t) const {
    const double tau = t + t_shift;
    if (x >= 0.0) {
      return amp_plus * std::erf(x * std::sqrt(a_plus) / (2.0 * std::sqrt(tau)));
    }
    return amp_minus() * std::erf(x * std::sqrt(a_minus) / (2.0 * std::sqrt(tau)));
  }

  // u_x(0, t), identical from both sides.
  double interface_slope(double t) const {
    const double tau = t + t_shift;
    return amp_plus * std::sqrt(a_plus / (M_PI * tau));
  }
};

// Piecewise quadratic whose branches solve the identity-coefficient
// transmission equation exactly once the right-hand sides are chosen as
// f_pm = a_pm c - tr(A_pm).
struct CompatibleQuadratic {
  fblab::pde::PiecewiseQuadratic P;
  double a_plus = 2.0;
  double a_minus = 0.5;

  static CompatibleQuadratic make_2d() {
    CompatibleQuadratic q;
    q.P.A_plus = Eigen::MatrixXd{{1.0, 0.3}, {0.3, 2.0}};
    q.P.A_minus = Eigen::MatrixXd{{1.0, 0.3}, {0.3, -1.0}};
    q.P.b = Eigen::VectorXd{{0.2, 1.0}};
    q.P.c = 1.0;
    q.P.d = 0.1;
    q.P.validate();
    return q;
  }

  static CompatibleQuadratic make_1d() {
    CompatibleQuadratic q;
    q.P.A_plus = Eigen::MatrixXd{{1.5}};
    q.P.A_minus = Eigen::MatrixXd{{-0.5}};
    q.P.b = Eigen::VectorXd{{1.0}};
    q.P.c = 1.0;
    q.P.d = 0.2;
    q.P.validate();
    return q;
  }

  double f_plus() const { return a_plus * P.c - P.A_plus.trace(); }
  double f_minus() const { return a_minus * P.c - P.A_minus.trace(); }

  fblab::pde::TransmissionSpec spec() const {
    fblab::pde::TransmissionSpec s;
    s.a_plus = a_plus;
    s.a_minus = a_minus;
    s.ell_lo = 1.0;
    s.ell_hi = 1.0;
    const double fp = f_plus(), fm = f_minus();
    s.rhs_plus = [fp](const std::vector<double>&, double) { return fp; };
    s.rhs_minus = [fm](const std::vector<double>&, double) { return fm; };
    return s;
  }

  fblab::pde::SpaceFn exact() const {
    const fblab::pde::PiecewiseQuadratic P_copy = P;
    return [P_copy](const std::vector<double>& x, double t) {
      return fblab::pde::piecewise_quadratic_eval(P_copy, x, t);
    };
  }
};

}  // namespace fixtures
