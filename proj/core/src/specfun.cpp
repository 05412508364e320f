#include "fblab/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fblab::specfun {
namespace {

constexpr int kMaxTerms = 100000;
// Stop once ten consecutive terms fall below this fraction of the partial sum.
constexpr long double kSeriesStop = 1e-17L;
constexpr long double kPi = 3.141592653589793238462643383279502884L;

bool near_integer(long double x, long double tol) {
  return std::fabs(x - std::round(x)) < tol;
}

bool nonpositive_integer(long double x, long double tol) {
  return x < 0.5L && near_integer(x, tol);
}

// Reciprocal gamma with its zeros at the poles made exact.  This is what
// lets one connection formula cover parameter choices where a whole term
// drops out instead of branching case by case.
long double rgamma(long double x) {
  if (nonpositive_integer(x, 1e-13L)) return 0.0L;
  return 1.0L / std::tgamma(x);
}

long double kummer_series(long double a, long double b, long double z) {
  long double sum = 1.0L, comp = 0.0L, term = 1.0L;
  int quiet = 0;
  for (int k = 0; k < kMaxTerms; ++k) {
    term *= (a + k) * z / ((b + k) * (k + 1));
    if (term == 0.0L) return sum;  // polynomial case terminated exactly
    const long double y = term - comp;
    const long double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    if (std::fabs(term) < kSeriesStop * std::fabs(sum)) {
      if (++quiet >= 10) return sum;
    } else {
      quiet = 0;
    }
  }
  throw numeric_error("kummer_m: series did not settle within " + std::to_string(kMaxTerms) +
                      " terms (a=" + std::to_string(static_cast<double>(a)) +
                      ", b=" + std::to_string(static_cast<double>(b)) +
                      ", z=" + std::to_string(static_cast<double>(z)) +
                      ", partial sum=" + std::to_string(static_cast<double>(sum)) + ")");
}

// Large-z expansion: an exponentially dominant part and an algebraic part.
// Both series are summed to their smallest term.
long double kummer_asym(long double a, long double b, long double z) {
  long double s1 = 1.0L, t1 = 1.0L, prev1 = 1e30L;
  for (int k = 0; k < 600; ++k) {
    t1 *= (b - a + k) * (1.0L - a + k) / ((k + 1) * z);
    if (std::fabs(t1) >= prev1) break;
    s1 += t1;
    prev1 = std::fabs(t1);
    if (prev1 < 1e-20L * std::fabs(s1)) break;
  }
  long double s2 = 1.0L, t2 = 1.0L, prev2 = 1e30L;
  for (int k = 0; k < 600; ++k) {
    t2 *= -(a + k) * (a - b + 1.0L + k) / ((k + 1) * z);
    if (std::fabs(t2) >= prev2) break;
    s2 += t2;
    prev2 = std::fabs(t2);
    if (prev2 < 1e-20L * std::fabs(s2)) break;
  }
  const long double dominant = rgamma(a) * std::exp(z) * std::pow(z, a - b) * s1;
  const long double algebraic = rgamma(b - a) * std::cos(kPi * a) * std::pow(z, -a) * s2;
  return std::tgamma(b) * (dominant + algebraic);
}

long double kummer_impl(long double a, long double b, long double z) {
  if (nonpositive_integer(b, 1e-12L)) {
    throw argument_error("kummer_m: b must not be zero or a negative integer (b=" +
                         std::to_string(static_cast<double>(b)) + ")");
  }
  if (nonpositive_integer(a, 1e-12L)) {
    return kummer_series(std::round(a), b, z);  // terminating polynomial, any z
  }
  if (z < 0.0L) {
    // Reflection onto positive argument; the series on the negative axis
    // alternates and cancels badly.
    return std::exp(z) * kummer_impl(b - a, b, -z);
  }
  if (z <= 40.0L) return kummer_series(a, b, z);
  return kummer_asym(a, b, z);
}

// U(-m, b, z) for non-negative integer m is a degree-m polynomial.
long double u_polynomial(int m, long double b, long double z) {
  long double sum = 0.0L, binom = 1.0L;
  for (int k = 0; k <= m; ++k) {
    long double poch = 1.0L;
    for (int j = 0; j < m - k; ++j) poch *= b + k + j;
    sum += binom * poch * std::pow(-z, k);
    binom *= static_cast<long double>(m - k) / (k + 1);
  }
  return (m % 2 != 0) ? -sum : sum;
}

// Two-solution connection valid away from integer b.  Reciprocal gamma
// zeroes out whichever term is absent for polynomial parameter choices.
long double u_connection(long double a, long double b, long double z) {
  const long double t1 = std::tgamma(1.0L - b) * rgamma(a - b + 1.0L) * kummer_impl(a, b, z);
  const long double t2 = std::tgamma(b - 1.0L) * rgamma(a) * std::pow(z, 1.0L - b) *
                         kummer_impl(a - b + 1.0L, 2.0L - b, z);
  return t1 + t2;
}

// Integer b as the limit of b +/- h, averaged to kill the odd part of the
// pole, then Richardson-extrapolated in h^2 across h = 1e-3 and 5e-4.
long double u_integer_limit(long double a, long double b, long double z) {
  auto avg = [&](long double h) {
    return 0.5L * (u_connection(a, b + h, z) + u_connection(a, b - h, z));
  };
  const long double coarse = avg(1e-3L);
  const long double fine = avg(5e-4L);
  return (4.0L * fine - coarse) / 3.0L;
}

// Divergent large-z series, summed to its smallest term.  Adequate once
// z is large enough that the smallest term is below target accuracy.
long double u_asym(long double a, long double b, long double z) {
  long double sum = 1.0L, term = 1.0L, prev = 1e30L;
  for (int k = 0; k < 1000; ++k) {
    term *= -(a + k) * (a - b + 1.0L + k) / ((k + 1) * z);
    if (std::fabs(term) >= prev) break;
    sum += term;
    prev = std::fabs(term);
    if (prev < 1e-20L * std::fabs(sum)) break;
  }
  return std::pow(z, -a) * sum;
}

// Mid-range z: start where the asymptotic series is reliable and march
// the ODE z w'' + (b - z) w' - a w = 0 inward with Taylor steps.  Marching
// toward smaller z follows the recessive-at-infinity solution, which is the
// dominant one in that direction, so the march is stable.
long double u_march(long double a, long double b, long double z_target) {
  constexpr int kOrder = 40;
  long double zc = 60.0L;
  long double w = u_asym(a, b, zc);
  long double wp = -a * u_asym(a + 1.0L, b + 1.0L, zc);  // dU/dz = -a U(a+1, b+1, z)

  long double d[kOrder + 2];
  while (zc > z_target) {
    const long double h = -std::min(zc - z_target, std::min(zc * 0.5L, 4.0L));
    d[0] = w;
    d[1] = wp;
    for (int m = 0; m + 2 <= kOrder + 1; ++m) {
      d[m + 2] = ((zc - b - m) * d[m + 1] + (a + m) * d[m]) / zc;
    }
    // Nested form of sum d_k h^k / k!: innermost level divides by the
    // largest k, so the factorial builds up one factor per level.
    long double wn = 0.0L, wpn = 0.0L;
    for (int k = kOrder + 1; k >= 1; --k) {
      wn = (d[k] + wn) * h / k;
      if (k <= kOrder) wpn = (d[k + 1] + wpn) * h / k;
    }
    w = wn + d[0];
    wp = wpn + d[1];
    zc += h;
  }
  return w;
}

long double tricomi_impl(long double a, long double b, long double z) {
  if (!(z > 0.0L)) {
    throw argument_error("tricomi_u: z must be positive (z=" +
                         std::to_string(static_cast<double>(z)) + ")");
  }
  if (nonpositive_integer(a, 1e-12L)) {
    return u_polynomial(static_cast<int>(-std::round(a)), b, z);
  }
  if (z >= 60.0L) return u_asym(a, b, z);
  if (z > 8.0L) return u_march(a, b, z);
  if (near_integer(b, 1e-9L)) return u_integer_limit(a, std::round(b), z);
  return u_connection(a, b, z);
}

}  // namespace

long double kummer_m_ld(long double a, long double b, long double z) {
  return kummer_impl(a, b, z);
}

long double tricomi_u_ld(long double a, long double b, long double z) {
  return tricomi_impl(a, b, z);
}

double kummer_m(double a, double b, double z) {
  return static_cast<double>(kummer_impl(a, b, z));
}

double tricomi_u(double a, double b, double z) {
  return static_cast<double>(tricomi_impl(a, b, z));
}

double unique_positive_zero(ProfileFn fn, double a, double b, double rel_tol) {
  if (!(a >= -1.0 && a < 0.0)) {
    throw argument_error("unique_positive_zero: a must lie in [-1, 0), got " + std::to_string(a));
  }
  if (!(b >= 1.0)) {
    throw argument_error("unique_positive_zero: b must be >= 1, got " + std::to_string(b));
  }
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw argument_error("unique_positive_zero: rel_tol must lie in (0, 1)");
  }

  auto eval = [&](long double z) {
    return fn == ProfileFn::kummer_m ? kummer_impl(a, b, z) : tricomi_impl(a, b, z);
  };
  // M starts at M(a,b,0) = 1 and decreases through its zero; U starts
  // negative (the z^(1-b) part carries 1/Gamma(a) < 0) and increases.
  const int sign_before = fn == ProfileFn::kummer_m ? 1 : -1;

  long double lo, hi;
  long double probe = b;
  long double f = eval(probe);
  if (f == 0.0L) return static_cast<double>(probe);
  constexpr int kMaxExpand = 60;
  if ((f > 0.0L ? 1 : -1) == sign_before) {
    lo = probe;
    hi = probe;
    int i = 0;
    do {
      if (++i > kMaxExpand) {
        throw numeric_error("unique_positive_zero: no sign change below z = " +
                            std::to_string(static_cast<double>(hi)) +
                            " (a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
      }
      hi *= 2.0L;
      f = eval(hi);
      if (f == 0.0L) return static_cast<double>(hi);
    } while ((f > 0.0L ? 1 : -1) == sign_before);
  } else {
    hi = probe;
    lo = probe;
    int i = 0;
    do {
      if (++i > kMaxExpand) {
        throw numeric_error("unique_positive_zero: no sign change above z = " +
                            std::to_string(static_cast<double>(lo)) +
                            " (a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
      }
      lo *= 0.5L;
      f = eval(lo);
      if (f == 0.0L) return static_cast<double>(lo);
    } while ((f > 0.0L ? 1 : -1) != sign_before);
  }

  while (hi - lo > rel_tol * hi) {
    const long double mid = 0.5L * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval at rounding resolution
    const long double fm = eval(mid);
    if (fm == 0.0L) return static_cast<double>(mid);
    if ((fm > 0.0L ? 1 : -1) == sign_before) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

double scaled_zero_m(double alpha, int n, double rel_tol) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw argument_error("scaled_zero_m: alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
  if (n < 2) throw argument_error("scaled_zero_m: dimension must be >= 2");
  const double z = unique_positive_zero(ProfileFn::kummer_m, -0.5 * alpha, 0.5 * n, rel_tol);
  return 2.0 * std::sqrt(z);
}

double scaled_zero_u(double alpha, int n, double eps, double rel_tol) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw argument_error("scaled_zero_u: alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
  if (n < 2) throw argument_error("scaled_zero_u: dimension must be >= 2");
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw argument_error("scaled_zero_u: eps must lie in (0, 1], got " + std::to_string(eps));
  }
  const double z = unique_positive_zero(ProfileFn::tricomi_u, -0.5 * alpha, 0.5 * n, rel_tol);
  return 2.0 * std::sqrt(z / eps);
}

}  // namespace fblab::specfun
