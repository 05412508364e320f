#include "fblab/selfsim.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "fblab/specfun.hpp"

namespace fblab::selfsim {
namespace {

// Gap between the vanishing radii of the two branches at a trial exponent.
// Positive when the Kummer radius is the larger one.
double branch_gap(double alpha, int n, double eps, double* s_m_out = nullptr,
                  double* s_u_out = nullptr) {
  const double s_m = specfun::scaled_zero_m(alpha, n, 1e-13);
  const double s_u = specfun::scaled_zero_u(alpha, n, eps, 1e-13);
  if (s_m_out) *s_m_out = s_m;
  if (s_u_out) *s_u_out = s_u;
  return s_m - s_u;
}

}  // namespace

MatchingResult solve_alpha(int n, double eps, double tol) {
  if (n < 2) throw argument_error("solve_alpha: dimension must be >= 2, got " + std::to_string(n));
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw argument_error("solve_alpha: eps must lie in (0, 1], got " + std::to_string(eps));
  }
  if (!(tol > 0.0)) throw argument_error("solve_alpha: tol must be positive");

  // The gap is negative at alpha = 2 (the negative branch vanishes further
  // out for eps < 1) and grows without bound as alpha -> 0, where the
  // positive branch's zero escapes to infinity.  Walk alpha down dyadically
  // until the sign flips, then bisect.
  double hi = 2.0;
  double gap_hi = branch_gap(hi, n, eps);
  if (gap_hi == 0.0) {
    const double s = specfun::scaled_zero_m(hi, n, 1e-13);
    return MatchingResult{n, eps, hi, s, 0.0, hi, hi};
  }
  std::ostringstream trail;
  trail << "(alpha=2, gap=" << gap_hi << ")";
  if (gap_hi > 0.0) {
    throw numeric_error("solve_alpha: gap already positive at alpha = 2; no root in (0, 2]. "
                        "samples: " + trail.str());
  }
  double lo = hi;
  double gap_lo = gap_hi;
  for (int k = 0; k < 50 && gap_lo <= 0.0; ++k) {
    hi = lo;
    lo *= 0.5;
    gap_lo = branch_gap(lo, n, eps);
    trail << " (alpha=" << lo << ", gap=" << gap_lo << ")";
    if (gap_lo == 0.0) {
      const double s = specfun::scaled_zero_m(lo, n, 1e-13);
      return MatchingResult{n, eps, lo, s, 0.0, lo, lo};
    }
  }
  if (gap_lo <= 0.0) {
    throw numeric_error("solve_alpha: no sign change found while walking alpha down. samples: " +
                        trail.str());
  }

  // Bisect: gap(lo) > 0, gap(hi) < 0.  Keep halving until the bracket meets
  // tol and the leftover radius mismatch is small against s_eps itself.
  double s_m = 0.0, s_u = 0.0;
  double alpha = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    alpha = 0.5 * (lo + hi);
    if (alpha <= lo || alpha >= hi) break;
    const double gap = branch_gap(alpha, n, eps, &s_m, &s_u);
    if (gap > 0.0) {
      lo = alpha;
    } else {
      hi = alpha;
    }
    const double s_mid = 0.5 * (s_m + s_u);
    if (hi - lo <= tol && std::abs(gap) <= 1e-9 * s_mid) break;
  }
  const double gap = branch_gap(alpha, n, eps, &s_m, &s_u);
  const double s_eps = 0.5 * (s_m + s_u);
  if (!(std::abs(gap) <= 1e-9 * s_eps)) {
    throw numeric_error("solve_alpha: bisection stalled with residual " + std::to_string(gap) +
                        " at alpha = " + std::to_string(alpha));
  }
  return MatchingResult{n, eps, alpha, s_eps, std::abs(gap), lo, hi};
}

double eps0(int n) {
  if (n < 2) throw argument_error("eps0: dimension must be >= 2, got " + std::to_string(n));
  // At the threshold the exponent equals 1 and both zeros coincide once the
  // Tricomi argument is rescaled: eps0 = z_U / z_M at a = -1/2.
  const double z_m = specfun::unique_positive_zero(specfun::ProfileFn::kummer_m, -0.5, 0.5 * n, 1e-13);
  const double z_u = specfun::unique_positive_zero(specfun::ProfileFn::tricomi_u, -0.5, 0.5 * n, 1e-13);
  return z_u / z_m;
}

SelfSimilarProfile build_profile(const MatchingResult& match) {
  if (match.n < 2 || !(match.eps > 0.0 && match.eps <= 1.0) ||
      !(match.alpha > 0.0 && match.alpha <= 2.0) || !(match.s_eps > 0.0)) {
    throw argument_error("build_profile: malformed matching result");
  }
  const long double a = -0.5L * static_cast<long double>(match.alpha);
  const long double b = 0.5L * static_cast<long double>(match.n);
  const long double eps = match.eps;
  const long double sw = match.s_eps;

  // Slopes of the raw branches at their own zeros, through the contiguous
  // derivative identities.  Their ratio is the scale the negative branch
  // needs for the flux [grad u] to vanish across the interface: since the
  // time coefficient is bounded there is no latent-heat term, and a kink
  // would leave a measure on the interface.
  const double z_m = specfun::unique_positive_zero(specfun::ProfileFn::kummer_m,
                                                   static_cast<double>(a), static_cast<double>(b), 1e-13);
  const double z_u = specfun::unique_positive_zero(specfun::ProfileFn::tricomi_u,
                                                   static_cast<double>(a), static_cast<double>(b), 1e-13);
  const long double m_slope = (a / b) * specfun::kummer_m_ld(a + 1.0L, b + 1.0L, z_m);
  const long double u_slope = -a * specfun::tricomi_u_ld(a + 1.0L, b + 1.0L, z_u);
  if (!(u_slope != 0.0L) || !std::isfinite(static_cast<double>(u_slope))) {
    throw numeric_error("build_profile: degenerate negative-branch slope");
  }
  const long double kappa = -m_slope / (eps * u_slope);
  if (!(kappa > 0.0L)) {
    throw numeric_error("build_profile: flux matching produced a non-positive branch scale " +
                        std::to_string(static_cast<double>(kappa)));
  }

  SelfSimilarProfile p;
  p.n = match.n;
  p.eps = match.eps;
  p.alpha = match.alpha;
  p.s_eps = match.s_eps;
  p.kappa = static_cast<double>(kappa);
  p.f_ld = [a, b, eps, sw, kappa](long double s) -> long double {
    if (s < 0.0L) throw argument_error("profile: s must be non-negative");
    if (s <= sw) return specfun::kummer_m_ld(a, b, 0.25L * s * s);
    return -kappa * specfun::tricomi_u_ld(a, b, 0.25L * eps * s * s);
  };
  p.fprime_ld = [a, b, eps, sw, kappa](long double s) -> long double {
    if (s < 0.0L) throw argument_error("profile: s must be non-negative");
    if (s == 0.0L) return 0.0L;
    if (s <= sw) {
      return (a / b) * specfun::kummer_m_ld(a + 1.0L, b + 1.0L, 0.25L * s * s) * (0.5L * s);
    }
    return kappa * a * eps * (0.5L * s) *
           specfun::tricomi_u_ld(a + 1.0L, b + 1.0L, 0.25L * eps * s * s);
  };

  const double mismatch = std::abs(p.f(match.s_eps) -
                                   (-p.kappa * specfun::tricomi_u(match.alpha * -0.5, 0.5 * match.n,
                                                                  0.25 * match.eps * match.s_eps * match.s_eps)));
  const double value_m = std::abs(p.f(match.s_eps));
  if (mismatch > 1e-8 || value_m > 1e-8) {
    throw numeric_error("build_profile: branch mismatch at s_eps: " + std::to_string(mismatch) +
                        ", |f_M(s_eps)| = " + std::to_string(value_m));
  }
  return p;
}

double ode_residual(const SelfSimilarProfile& profile, const std::vector<double>& s_samples) {
  if (!profile.f_ld || !profile.fprime_ld) {
    throw argument_error("ode_residual: profile has no evaluators");
  }
  const long double h = 1e-4L;
  const long double n = profile.n;
  const long double alpha = profile.alpha;
  double worst = 0.0;
  for (double sd : s_samples) {
    if (!(sd >= 1e-3)) {
      throw argument_error("ode_residual: sample s = " + std::to_string(sd) +
                           " too close to the origin (need s >= 1e-3)");
    }
    if (std::abs(sd - profile.s_eps) < 1e-3) {
      throw argument_error("ode_residual: sample s = " + std::to_string(sd) +
                           " inside the 1e-3 band around the branch switch");
    }
    const long double s = sd;
    const long double c = sd < profile.s_eps ? 1.0L : static_cast<long double>(profile.eps);

    const auto& f = profile.f_ld;
    // Richardson pairs at h and 2h knock the leading h^2 error out of both
    // difference quotients.
    const long double f0 = f(s);
    const long double fp1 = f(s + h), fm1 = f(s - h);
    const long double fp2 = f(s + 2.0L * h), fm2 = f(s - 2.0L * h);
    const long double d1_h = (fp1 - fm1) / (2.0L * h);
    const long double d1_2h = (fp2 - fm2) / (4.0L * h);
    const long double d1 = (4.0L * d1_h - d1_2h) / 3.0L;
    const long double d2_h = (fp1 - 2.0L * f0 + fm1) / (h * h);
    const long double d2_2h = (fp2 - 2.0L * f0 + fm2) / (4.0L * h * h);
    const long double d2 = (4.0L * d2_h - d2_2h) / 3.0L;

    const long double r = d2 + ((n - 1.0L) / s - c * s * 0.5L) * d1 + c * (alpha * 0.5L) * f0;
    worst = std::max(worst, std::abs(static_cast<double>(r)));
  }
  return worst;
}

double evaluate_u(const SelfSimilarProfile& profile, const std::vector<double>& x, double t) {
  if (!(t < 0.0)) throw argument_error("evaluate_u: t must be negative, got " + std::to_string(t));
  long double r2 = 0.0L;
  for (double xi : x) r2 += static_cast<long double>(xi) * xi;
  const long double mt = -static_cast<long double>(t);
  const long double s = std::sqrt(r2 / mt);
  return static_cast<double>(std::pow(mt, 0.5L * profile.alpha) * profile.f_ld(s));
}

std::vector<double> gradient_blowup_certificate(const SelfSimilarProfile& profile, double t,
                                                const std::vector<double>& radii) {
  if (!(profile.alpha < 1.0)) {
    throw argument_error("gradient_blowup_certificate: not applicable, alpha = " +
                         std::to_string(profile.alpha) + " >= 1 keeps the gradient bounded");
  }
  if (!(t < 0.0)) throw argument_error("gradient_blowup_certificate: t must be negative");
  const long double mt = -static_cast<long double>(t);
  const long double pre = std::pow(mt, 0.5L * (profile.alpha - 1.0));
  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) {
    if (!(r >= 0.0)) throw argument_error("gradient_blowup_certificate: radii must be non-negative");
    const long double s = static_cast<long double>(r) / std::sqrt(mt);
    out.push_back(static_cast<double>(pre * std::fabs(profile.fprime_ld(s))));
  }
  return out;
}

}  // namespace fblab::selfsim
