#pragma once

#include "fblab/errors.hpp"

namespace fblab::specfun {

// Confluent hypergeometric pair used by the radial similarity profiles.
// The accuracy contract targets the parameter window that actually occurs
// there: a in [-1, 0), b = n/2 with n >= 2, z > 0.  Other real parameters
// are accepted on a best-effort basis.

// Regularized series evaluation of M(a, b, z) (Kummer).  Throws
// argument_error when b is zero or a negative integer, numeric_error when
// the series fails to converge within the term budget.
double kummer_m(double a, double b, double z);

// U(a, b, z) (Tricomi) for z > 0.  Integer b is handled as the limit of
// nearby non-integer values; moderate and large z switch to an inward ODE
// march and to the divergent asymptotic series, respectively.
double tricomi_u(double a, double b, double z);

// Extended-precision variants.  Downstream finite differences sit on top of
// these; in double precision the second-difference rounding floor would
// exceed the residual tolerances the lab works to.
long double kummer_m_ld(long double a, long double b, long double z);
long double tricomi_u_ld(long double a, long double b, long double z);

enum class ProfileFn { kummer_m, tricomi_u };

// Location of the unique zero of M(a,b,.) or U(a,b,.) on (0, inf), for
// a in [-1, 0) and b >= 1.  M decreases through its zero, U increases
// through its own.  Brackets by geometric expansion from z = b, then
// bisects to the requested relative width.  Throws numeric_error when no
// sign change is found before the expansion cap.
double unique_positive_zero(ProfileFn fn, double a, double b, double rel_tol = 1e-12);

// Zeros in the similarity variable s: the positive branch of a profile with
// exponent alpha in dimension n vanishes at scaled_zero_m(alpha, n) and the
// negative branch, with diffusivity ratio eps, at scaled_zero_u(alpha, n, eps).
// These are 2 sqrt(z_M) and 2 sqrt(z_U / eps).
double scaled_zero_m(double alpha, int n, double rel_tol = 1e-12);
double scaled_zero_u(double alpha, int n, double eps, double rel_tol = 1e-12);

}  // namespace fblab::specfun
