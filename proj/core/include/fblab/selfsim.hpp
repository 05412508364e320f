#pragma once

#include <functional>
#include <vector>

#include "fblab/errors.hpp"

namespace fblab::selfsim {

// Result of matching the zeros of the two profile branches.
struct MatchingResult {
  int n = 0;
  double eps = 0.0;
  double alpha = 0.0;     // similarity exponent, in (0, 2]
  double s_eps = 0.0;     // common vanishing radius of the two branches
  double residual = 0.0;  // |s_M - s_U| left after the match
  double alpha_lo = 0.0;  // final bisection bracket
  double alpha_hi = 0.0;
};

// Solves for the exponent alpha at which the positive branch (Kummer) and
// the scaled negative branch (Tricomi) vanish at the same radius.  eps is
// the diffusivity ratio of the negative phase, in (0, 1].  Throws
// numeric_error with the sampled gap values when no root is bracketed.
MatchingResult solve_alpha(int n, double eps, double tol = 1e-12);

// Threshold ratio: for eps below it the matched exponent drops under 1 and
// the gradient of the similarity solution blows up at the vertex.
double eps0(int n);

// Radial profile f(s):  Kummer branch (positive) up to s_eps, scaled
// Tricomi branch (negative) beyond.  The long-double evaluators feed every
// finite-difference residual downstream.
struct SelfSimilarProfile {
  int n = 0;
  double eps = 1.0;
  double alpha = 0.0;
  double s_eps = 0.0;  // branch switch radius
  double kappa = 1.0;  // scale of the negative branch, fixed by flux continuity

  std::function<long double(long double)> f_ld;
  std::function<long double(long double)> fprime_ld;

  double f(double s) const { return static_cast<double>(f_ld(s)); }
  double fprime(double s) const { return static_cast<double>(fprime_ld(s)); }
};

// Builds the profile from a matching result.  The negative branch is scaled
// so the one-sided slopes agree at s_eps (the zero match fixes only the
// location; flux continuity fixes the remaining free constant).  Branch
// values at s_eps disagreeing by more than 1e-8 throw numeric_error.
SelfSimilarProfile build_profile(const MatchingResult& match);

// Largest absolute ODE residual over the sample radii, via Richardson
// second differences with base step 1e-4 in long double.  Samples must
// satisfy s >= 1e-3 and |s - s_eps| >= 1e-3.
double ode_residual(const SelfSimilarProfile& profile, const std::vector<double>& s_samples);

// u(x, t) = (-t)^(alpha/2) f(|x| / sqrt(-t)); requires t < 0.
double evaluate_u(const SelfSimilarProfile& profile, const std::vector<double>& x, double t);

// |grad u| on the spheres |x| = r at a fixed t < 0 (the gradient is radial,
// so the sup over each sphere is the value itself).  Only meaningful as a
// blow-up certificate when alpha < 1; otherwise throws argument_error.
std::vector<double> gradient_blowup_certificate(const SelfSimilarProfile& profile, double t,
                                                const std::vector<double>& radii);

}  // namespace fblab::selfsim
