#pragma once

#include <vector>

#include "fblab/errors.hpp"

namespace fblab::barrier {

// Parameters of the comparison barrier
//
//   w(x, t) = x_n - delta + c0 delta s(t) phi1(x') phi2(x_n + (5/8) t) - c0 delta
//
// with s(t) = exp(-K (t + 4/5)), phi1 the first Dirichlet eigenfunction of
// the (n-1)-ball of radius r normalized to peak value one, and phi2 a cubic
// bell.  Only n = 2 and n = 3 are supported; r is pinned at 5/12.
struct BarrierSpec {
  int n = 2;
  double r = 5.0 / 12.0;
  double delta = 0.01;
  double c0 = 0.1;
  double K = 1.0;
  double a_plus = 1.0;
  double a_minus = 1.0;

  // Throws argument_error for unsupported n, a modified r, delta outside
  // (0, 1/20], c0 outside (0, 1), K <= 0, or phase coefficients outside
  // (0, 1].  Whether K is large enough for the subsolution property is not
  // a validation matter; subsolution_check settles it.
  void validate() const;
};

// The slanted space-time cylinder the barrier lives on: at each time
// t in (-4/5, 0] the slice is {|x'| < r} x {|x_n + (5/8) t| <= r}.
struct ObliqueCylinder {
  double r = 5.0 / 12.0;

  bool contains(const std::vector<double>& x, double t) const;
  // Closure membership, used by barrier_eval's domain guard.
  bool contains_closure(const std::vector<double>& x, double t) const;
};

// J0 by its power series; accurate for the moderate arguments used here.
double bessel_j0(double x);

// First positive zero of J0, found once by Newton on the series.
double bessel_j0_zero1();

// Principal Dirichlet eigenvalue of the (n-1)-ball of radius r.
double lambda1(int n, double r);

// Eigenfunction value at x' (a vector of n-1 entries, |x'| <= r):
// cosine profile for n = 2, J0 profile for n = 3, both peaking at 1.
double phi1(const std::vector<double>& xprime, int n, double r);

// Cubic bell (2/r^3)|s|^3 - (3/r^2)s^2 + 1 on [-r, r]; even, range [0, 1].
double phi2(double s, double r);
double phi2_prime(double s, double r);
// Second derivative; |s|^3 is twice continuously differentiable, so this is
// continuous through s = 0 where it equals -6/r^2.
double phi2_second(double s, double r);

// Barrier value at a point of the closed cylinder; throws outside it.
double barrier_eval(const BarrierSpec& spec, const std::vector<double>& x, double t);

// a w_t - Laplacian(w) at a point of the cylinder, from the closed forms of
// the factors.  `a_time_coef` selects the phase coefficient multiplying w_t.
double barrier_operator(const BarrierSpec& spec, double a_time_coef,
                        const std::vector<double>& x, double t);

// Largest value of the operator over both phases on a dense interior grid
// (`grid_resolution` points per axis), the seam band |x_n + (5/8)t| < 1e-6
// excluded.  Negative means the barrier is a strict subsolution at this K.
double subsolution_scan(const BarrierSpec& spec, int grid_resolution);

struct SubsolutionReport {
  double max_operator_value = 0.0;
  double K_used = 0.0;
  // c0 exp(-4K/5) inf phi over the unit-scale core cylinder; the margin by
  // which the barrier stays above x_n - delta there.
  double c = 0.0;
  bool passed = false;
};

// Doubles K from spec.K until the scan goes strictly negative (cap 2^20,
// numeric_error with per-regime diagnostics beyond it), then certifies the
// lower bound w + c0 delta >= x_n - (1 - c) delta on the core cylinder
// Q_{1/3} and its containment in the barrier domain.
SubsolutionReport subsolution_check(const BarrierSpec& spec, int grid_resolution);

}  // namespace fblab::barrier
