#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fblab/selfsim.hpp"
#include "fblab/specfun.hpp"

using namespace fblab;
using namespace fblab::selfsim;

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

}  // namespace

TEST_CASE("solve_alpha input validation") {
  CHECK_THROWS_AS(solve_alpha(1, 0.5), argument_error);
  CHECK_THROWS_AS(solve_alpha(3, 0.0), argument_error);
  CHECK_THROWS_AS(solve_alpha(3, 1.5), argument_error);
}

TEST_CASE("matched exponent for n = 3, eps = 0.1 against frozen reference") {
  const MatchingResult m = solve_alpha(3, 0.1);
  CHECK(rel_err(m.alpha, 0.6954402605124541248038) < 1e-9);
  CHECK(rel_err(m.s_eps, 3.28977713977875843762) < 1e-9);
  CHECK(m.residual <= 1e-9 * m.s_eps);
  CHECK(m.alpha_lo <= m.alpha);
  CHECK(m.alpha_hi >= m.alpha);
  // The two branch zeros agree at the matched exponent.
  const double sm = specfun::scaled_zero_m(m.alpha, 3);
  const double su = specfun::scaled_zero_u(m.alpha, 3, 0.1);
  CHECK(std::abs(sm - su) <= 1e-9 * m.s_eps);
  // And s_eps sits between the symmetric-case bounds.
  CHECK(m.s_eps > std::sqrt(6.0));
  CHECK(m.s_eps < std::sqrt(60.0));
}

TEST_CASE("eps = 1 degenerates to the quadratic profile with alpha = 2") {
  const MatchingResult m = solve_alpha(3, 1.0);
  CHECK(m.alpha == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.s_eps == doctest::Approx(std::sqrt(6.0)).epsilon(1e-11));
}

TEST_CASE("threshold ratio eps0 against frozen references") {
  CHECK(rel_err(eps0(3), 0.2216381115783186331782) < 1e-10);
  CHECK(rel_err(eps0(5), 0.3414889697630917702181) < 1e-10);
  CHECK(rel_err(eps0(7), 0.41500303501442983614) < 1e-10);
  for (int n : {2, 3, 4, 5, 6, 7, 10}) {
    const double e0 = eps0(n);
    CHECK(e0 > 0.0);
    CHECK(e0 < 1.0);
  }
}

TEST_CASE("exponent crosses one exactly at the threshold ratio") {
  const double e0 = eps0(3);
  const MatchingResult below = solve_alpha(3, 0.9 * e0);
  const MatchingResult above = solve_alpha(3, 1.1 * e0);
  CHECK(below.alpha < 1.0);
  CHECK(above.alpha >= 1.0);
  CHECK(rel_err(below.alpha, 0.9529512604072968028373) < 1e-8);
  CHECK(rel_err(above.alpha, 1.044590310897032913188) < 1e-8);
}

TEST_CASE("exponent is increasing in eps along the dyadic sweep") {
  const double e0 = eps0(3);
  double prev = 0.0;
  for (double factor : {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2}) {
    const double alpha = solve_alpha(3, e0 * factor).alpha;
    CHECK(alpha > prev);
    prev = alpha;
  }
  CHECK(solve_alpha(3, e0 / 16).alpha < 0.5 * solve_alpha(3, e0 / 2).alpha);
}

TEST_CASE("profile construction: exact vertex value and flux-matched scale") {
  const MatchingResult m = solve_alpha(3, 0.1);
  const SelfSimilarProfile p = build_profile(m);
  CHECK(p.f(0.0) == 1.0);  // Kummer series at argument zero, exactly
  CHECK(rel_err(p.kappa, 2.674940296094217138647) < 1e-9);
  CHECK(rel_err(p.fprime(m.s_eps), -0.9783460464060339414705) < 1e-8);

  // One-sided difference quotients on both sides of the switch agree with
  // the analytic slope: this is the flux-continuity condition.
  const double h = 1e-6;
  const double left = (p.f(m.s_eps) - p.f(m.s_eps - h)) / h;
  const double right = (p.f(m.s_eps + h) - p.f(m.s_eps)) / h;
  CHECK(std::abs(left - right) < 1e-5);
  CHECK(left == doctest::Approx(p.fprime(m.s_eps - h)).epsilon(1e-5));
}

TEST_CASE("profile sign structure: positive core, negative tail") {
  const MatchingResult m = solve_alpha(3, 0.1);
  const SelfSimilarProfile p = build_profile(m);
  int sign_changes = 0;
  double prev = p.f(1e-4);
  for (int i = 1; i <= 10000; ++i) {
    const double s = 3.0 * m.s_eps * i / 10000.0;
    const double cur = p.f(s);
    if (prev > 0.0 && cur < 0.0) ++sign_changes;
    if (prev < 0.0 && cur > 0.0) ++sign_changes;
    prev = cur;
  }
  CHECK(sign_changes == 1);
}

TEST_CASE("ODE residual of the alpha = 2 closed form") {
  const MatchingResult m = solve_alpha(3, 1.0);
  const SelfSimilarProfile p = build_profile(m);
  // f(s) = 1 - s^2/6 on both branches when eps = 1, n = 3.
  for (double s : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    CHECK(std::abs(p.f(s) - (1.0 - s * s / 6.0)) < 1e-13 * (1.0 + s * s));
  }
  std::vector<double> sweep;
  for (double s = 0.1; s <= 10.0; s += 0.37) {
    if (std::abs(s - p.s_eps) > 1e-3) sweep.push_back(s);
  }
  CHECK(ode_residual(p, sweep) <= 1e-8);
}

TEST_CASE("ODE residual of the matched two-phase profile") {
  const MatchingResult m = solve_alpha(3, 0.1);
  const SelfSimilarProfile p = build_profile(m);
  std::vector<double> sweep;
  for (double s = 0.05; s <= 3.0 * p.s_eps; s += 0.05) {
    if (std::abs(s - p.s_eps) > 1.5e-3) sweep.push_back(s);
  }
  CHECK(ode_residual(p, sweep) <= 1e-6);
}

TEST_CASE("ODE residual honors its sampling preconditions") {
  const MatchingResult m = solve_alpha(3, 0.1);
  const SelfSimilarProfile p = build_profile(m);
  CHECK_THROWS_AS(ode_residual(p, {0.0}), argument_error);
  CHECK_THROWS_AS(ode_residual(p, {5e-4}), argument_error);
  CHECK_THROWS_AS(ode_residual(p, {p.s_eps + 5e-4}), argument_error);
}

TEST_CASE("ODE residual of the zero profile is zero") {
  SelfSimilarProfile zero;
  zero.n = 3;
  zero.eps = 0.5;
  zero.alpha = 1.0;
  zero.s_eps = 2.0;
  zero.f_ld = [](long double) -> long double { return 0.0L; };
  zero.fprime_ld = [](long double) -> long double { return 0.0L; };
  CHECK(ode_residual(zero, {0.5, 1.0, 3.0}) == 0.0);
}

TEST_CASE("evaluate_u: validation and parabolic scaling identity") {
  const MatchingResult m = solve_alpha(3, 0.1);
  const SelfSimilarProfile p = build_profile(m);
  CHECK_THROWS_AS(evaluate_u(p, {0.1, 0.0, 0.0}, 0.0), argument_error);
  CHECK_THROWS_AS(evaluate_u(p, {0.1, 0.0, 0.0}, 0.5), argument_error);

  std::mt19937 rng(17u);
  std::uniform_real_distribution<double> ux(-1.5, 1.5), ut(0.05, 1.0), ul(0.3, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> x = {ux(rng), ux(rng), ux(rng)};
    const double t = -ut(rng);
    const double lam = ul(rng);
    const std::vector<double> xs = {lam * x[0], lam * x[1], lam * x[2]};
    const double lhs = evaluate_u(p, xs, lam * lam * t);
    const double rhs = std::pow(lam, p.alpha) * evaluate_u(p, x, t);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
}

TEST_CASE("gradient certificate rejects bounded-gradient profiles") {
  const MatchingResult m = solve_alpha(3, 1.0);  // alpha = 2
  const SelfSimilarProfile p = build_profile(m);
  CHECK_THROWS_AS(gradient_blowup_certificate(p, -0.25, {0.1}), argument_error);
}

TEST_CASE("gradient certificate values and vertex non-Lipschitz growth") {
  const MatchingResult m = solve_alpha(3, 0.1);
  const SelfSimilarProfile p = build_profile(m);
  const double t = -0.25;
  const auto vals = gradient_blowup_certificate(p, t, {0.1, 0.5, 1.0});
  REQUIRE(vals.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double r = (i == 0) ? 0.1 : (i == 1 ? 0.5 : 1.0);
    const double expect = std::pow(0.25, 0.5 * (p.alpha - 1.0)) *
                          std::abs(p.fprime(r / 0.5));
    CHECK(vals[i] == doctest::Approx(expect).epsilon(1e-12));
  }

  // At the vertex u(0, t) = (-t)^(alpha/2); the ratio |u| / sqrt(-t) blows
  // up along t = -2^(-k) because alpha < 1.
  double prev_ratio = 0.0;
  for (int k = 2; k <= 12; ++k) {
    const double tau = std::pow(2.0, -k);
    const double ratio = evaluate_u(p, {0.0, 0.0, 0.0}, -tau) / std::sqrt(tau);
    CHECK(ratio > prev_ratio);
    prev_ratio = ratio;
  }
}
