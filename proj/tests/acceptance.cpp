// Acceptance gate for the laboratory: eleven independent criteria, one
// verdict line each, nonzero exit when any fails.  Tolerances are written
// out literally next to the quantities they bound so the gate reads as the
// contract it enforces.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fblab/barrier.hpp"
#include "fblab/errors.hpp"
#include "fblab/experiment.hpp"
#include "fblab/fbdiag.hpp"
#include "fblab/geometry.hpp"
#include "fblab/hodograph.hpp"
#include "fblab/pde.hpp"
#include "fblab/selfsim.hpp"
#include "fblab/specfun.hpp"
#include "fixtures.hpp"

using namespace fblab;

namespace {

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// Collects the verdict of one criterion: every require() that fails appends
// its reason, notes carry the measured numbers shown on success too.
struct Gate {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& reason) {
    if (condition) return;
    ok = false;
    append("FAILED: " + reason);
  }
  void note(const std::string& text) { append(text); }
  void append(const std::string& text) {
    if (!detail.empty()) detail += "; ";
    detail += text;
  }
};

double rel_gap(double value, double target) {
  return std::fabs(value - target) / std::fabs(target);
}

GridField sample_1d(const std::function<double(double, double)>& f, double lo,
                    double hi, int n, double t0, double dt, int nt) {
  const double h = (hi - lo) / (n - 1);
  GridField field(1, {lo}, {h}, {n}, t0, dt, nt);
  for (int k = 0; k < nt; ++k)
    for (int i = 0; i < n; ++i) field.at(i, k) = f(field.coord(0, i), field.time(k));
  return field;
}

// Free-boundary point nearest the tangential origin on the final slice.
SpaceTime anchor_point(const GridField& field, double search_radius) {
  const double top = field.time(field.time_nodes() - 1);
  const ParabolicCylinder window{std::vector<double>(field.dim(), 0.0), top,
                                 search_radius};
  const auto graph = fbdiag::extract_free_boundary(field, window);
  const fbdiag::FreeBoundarySample* best = nullptr;
  double best_key = std::numeric_limits<double>::infinity();
  for (const auto& sample : graph.samples) {
    if (sample.t != top) continue;
    double tangential = 0.0;
    for (double c : sample.xprime) tangential += c * c;
    if (tangential < best_key) {
      best_key = tangential;
      best = &sample;
    }
  }
  if (best == nullptr) throw numeric_error("free boundary missing from the final slice");
  SpaceTime point;
  point.x = best->xprime;
  point.x.push_back(best->g);
  point.t = best->t;
  return point;
}

// ------------------------------------------------------------- criterion 1

Gate closed_form_zeros() {
  Gate g;
  double worst = 0.0;
  for (int n : {3, 5, 7}) {
    worst = std::max(worst, rel_gap(specfun::scaled_zero_m(2.0, n), std::sqrt(2.0 * n)));
    for (double eps : {0.1, 0.5, 0.9}) {
      worst = std::max(worst, rel_gap(specfun::scaled_zero_u(2.0, n, eps),
                                      std::sqrt(2.0 * n / eps)));
    }
  }
  g.require(worst <= 1e-10, fmt("worst closed-form gap %.2e > 1e-10", worst));
  g.note(fmt("worst rel gap %.1e over n in {3,5,7}, eps in {0.1,0.5,0.9}", worst));
  return g;
}

// ------------------------------------------------------------- criterion 2

Gate exponent_threshold() {
  Gate g;
  const double z_m = specfun::scaled_zero_m(1.0, 3);
  const double z_u = specfun::scaled_zero_u(1.0, 3, 1.0);
  const double from_zeros = (z_u / z_m) * (z_u / z_m);
  const double e0 = selfsim::eps0(3);
  g.require(rel_gap(from_zeros, e0) <= 1e-12,
            fmt("threshold %.12g disagrees with the zero ratio %.12g", e0, from_zeros));

  const auto below = selfsim::solve_alpha(3, 0.9 * e0);
  const auto above = selfsim::solve_alpha(3, 1.1 * e0);
  g.require(below.residual <= 1e-9 && above.residual <= 1e-9,
            fmt("matching residuals %.2e / %.2e > 1e-9", below.residual, above.residual));
  g.require(below.alpha < 1.0, fmt("alpha(0.9 eps0) = %.6f not < 1", below.alpha));
  g.require(above.alpha >= 1.0, fmt("alpha(1.1 eps0) = %.6f not >= 1", above.alpha));

  std::vector<double> alphas;
  for (double factor : {0.5, 0.25, 0.125, 0.0625}) {
    const auto match = selfsim::solve_alpha(3, factor * e0);
    g.require(match.residual <= 1e-9,
              fmt("matching residual %.2e > 1e-9 at eps = %.4f", match.residual,
                  factor * e0));
    alphas.push_back(match.alpha);
  }
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
    g.require(alphas[i + 1] < alphas[i],
              fmt("alpha not strictly decreasing: %.6f then %.6f", alphas[i],
                  alphas[i + 1]));
  }
  g.require(alphas.back() < alphas.front() / 2.0,
            fmt("alpha(eps0/16) = %.4f not below half of alpha(eps0/2) = %.4f",
                alphas.back(), alphas.front()));
  g.note(fmt("eps0 = %.6f, alpha %.4f -> %.4f along the eps halvings", e0,
             alphas.front(), alphas.back()));
  return g;
}

// ------------------------------------------------------------- criterion 3

Gate profile_certification() {
  Gate g;
  const auto match = selfsim::solve_alpha(3, 0.1);
  const auto profile = selfsim::build_profile(match);

  g.require(profile.f(0.0) == 1.0, fmt("f(0) = %.17g is not exactly 1", profile.f(0.0)));
  g.require(profile.s_eps > std::sqrt(6.0) && profile.s_eps < std::sqrt(60.0),
            fmt("s_eps = %.6f outside (sqrt 6, sqrt 60)", profile.s_eps));

  // Residual sweep over [0.05, 3 s_eps], the branch seam excluded where the
  // one-sided second differences would straddle it.
  std::vector<double> sweep;
  for (double s = 0.05; s <= 3.0 * profile.s_eps; s += 0.01) {
    if (std::fabs(s - profile.s_eps) > 1.5e-3) sweep.push_back(s);
  }
  const double residual = selfsim::ode_residual(profile, sweep);
  g.require(residual <= 1e-6, fmt("ODE residual %.2e > 1e-6", residual));

  int sign_changes = 0;
  double previous = profile.f(3.0 * profile.s_eps / 1e4);
  for (int j = 2; j <= 10000; ++j) {
    const double value = profile.f(3.0 * profile.s_eps * j / 1e4);
    if (previous != 0.0 && value != 0.0 && (previous > 0.0) != (value > 0.0))
      ++sign_changes;
    if (value != 0.0) previous = value;
  }
  g.require(sign_changes == 1, fmt("%d sign changes in the 1e4-point scan", sign_changes));
  g.note(fmt("residual %.1e over %zu radii, one sign change at s_eps = %.4f", residual,
             sweep.size(), profile.s_eps));
  return g;
}

// ------------------------------------------------------------- criterion 4

Gate gradient_blowup() {
  Gate g;
  const auto profile = selfsim::build_profile(selfsim::solve_alpha(3, 0.1));
  g.require(profile.alpha < 1.0, "profile exponent is not in the blow-up regime");

  // Sup of |grad u| over the fixed ball |x| <= 0.1, sampled on 256 radii.
  std::vector<double> radii;
  for (int i = 1; i <= 256; ++i) radii.push_back(0.1 * i / 256.0);
  std::vector<double> sups;
  for (int k = 1; k <= 6; ++k) {
    const double t = -std::pow(4.0, -k);
    const auto values = selfsim::gradient_blowup_certificate(profile, t, radii);
    double sup = 0.0;
    for (double v : values) sup = std::max(sup, v);
    sups.push_back(sup);
  }
  // Each k step doubles t twice, so the required per-step growth is the
  // square of the per-doubling factor 2^{(1-alpha)/2 * 0.99}, with 5% slack.
  const double floor_per_step =
      std::pow(2.0, (1.0 - profile.alpha) * 0.99) * 0.95;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < sups.size(); ++i) {
    worst_ratio = std::min(worst_ratio, sups[i + 1] / sups[i]);
  }
  g.require(worst_ratio >= floor_per_step,
            fmt("growth ratio %.4f below the required %.4f", worst_ratio, floor_per_step));
  g.note(fmt("sup|grad u| grew %.3fx per time-quartering (floor %.3f), alpha = %.4f",
             worst_ratio, floor_per_step, profile.alpha));
  return g;
}

// ------------------------------------------------------------- criterion 5

Gate linear_transmission_exactness() {
  Gate g;
  const auto quadratic = fixtures::CompatibleQuadratic::make_2d();
  const auto spec = quadratic.spec();
  const auto exact = quadratic.exact();
  const pde::SpaceTimeBox box{{-1.0, -1.0}, {1.0, 1.0}, 0.0, 0.5};

  auto solve = [&](int cells) {
    const double h = 2.0 / cells;
    const pde::SolveSteps steps{{cells, cells}, cells};
    const GridField w =
        pde::solve_linear_transmission(spec, box, exact, steps, 2.0 * h);
    double sup = 0.0;
    for (int k = 0; k < w.time_nodes(); ++k) {
      for (int j = 0; j < w.nodes(1); ++j) {
        for (int i = 0; i < w.nodes(0); ++i) {
          const std::vector<double> x{w.coord(0, i), w.coord(1, j)};
          sup = std::max(sup, std::fabs(w.value(i, j, k) - exact(x, w.time(k))));
        }
      }
    }
    return sup;
  };

  const double h64 = 2.0 / 64.0;
  const double coarse = solve(64);
  const double fine = solve(128);
  const double bound = 5.0 * (h64 * h64 + 2.0 * h64);
  const double order = std::log2(coarse / fine);
  g.require(coarse <= bound, fmt("sup error %.3e exceeds 5(h^2 + w) = %.3e", coarse, bound));
  g.require(order >= 1.5, fmt("refinement order %.2f < 1.5", order));
  g.note(fmt("sup error %.2e (bound %.2e), order %.2f under one refinement", coarse,
             bound, order));
  return g;
}

// ------------------------------------------------------------- criterion 6

Gate selfsim_evolution_oracle() {
  Gate g;
  const auto profile = selfsim::build_profile(selfsim::solve_alpha(3, 0.1));
  const pde::SpaceTimeBox box{{0.0}, {3.0}, -1.0, -0.5};
  pde::NonlinearOptions opts;
  opts.geometry = pde::Geometry::radial1d;
  opts.radial_n = 3;
  const auto seed = [&](const std::vector<double>& x, double t) {
    return selfsim::evaluate_u(profile, x, t);
  };

  auto measure = [&](int cells) {
    const double h = 3.0 / cells;
    const pde::SolveSteps steps{{cells}, cells / 4};
    const GridField w =
        pde::solve_nonlinear(1.0, profile.eps, box, seed, steps, 2.0 * h, opts);
    const int top = w.time_nodes() - 1;
    double sup = 0.0;
    for (int i = 0; i < w.nodes(0); ++i) {
      const double r = w.coord(0, i);
      if (r < 0.05 || r > 2.0) continue;
      sup = std::max(sup, std::fabs(w.value(i, top) - seed({r}, w.time(top))));
    }
    return sup;
  };

  const double coarse = measure(1024);
  const double fine = measure(2048);
  g.require(fine <= 0.02, fmt("sup error %.3e > 0.02 at 2048 cells", fine));
  g.require(coarse >= 1.5 * fine,
            fmt("halving h and reg_width only improved %.3e -> %.3e", coarse, fine));
  g.note(fmt("sup error %.2e at 2048 cells, %.2fx better than 1024", fine, coarse / fine));
  return g;
}

// ------------------------------------------------------------- criterion 7

Gate harnack_oscillation_decay() {
  Gate g;
  const GridField field = experiment::perturbed_flat_solve_2d(0.01, 128, 64);
  const SpaceTime fb = anchor_point(field, 0.3);
  const ParabolicCylinder window{fb.x, fb.t, 0.9};
  const auto osc = fbdiag::harnack_decay_probe(field, window, 3, 0.01);

  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < osc.size(); ++i) {
    g.require(osc[i] > 0.0, fmt("oscillation at level %zu vanished", i));
    const double ratio = osc[i + 1] / osc[i];
    worst = std::max(worst, ratio);
    g.require(ratio < 1.0, fmt("oscillation ratio %.3f at level %zu not below 1", ratio, i));
  }

  // Exactly flat data must decay to nothing at every level.
  GridField flat = field;
  for (int k = 0; k < flat.time_nodes(); ++k) {
    for (int j = 0; j < flat.nodes(1); ++j) {
      for (int i = 0; i < flat.nodes(0); ++i) flat.at(i, j, k) = flat.coord(1, j);
    }
  }
  const ParabolicCylinder centered{{0.0, 0.0}, flat.time(flat.time_nodes() - 1), 0.9};
  bool all_zero = true;
  for (double v : fbdiag::harnack_decay_probe(flat, centered, 3, 0.01)) {
    all_zero = all_zero && v == 0.0;
  }
  g.require(all_zero, "flat field produced nonzero oscillations");
  g.note(fmt("three nested ratios all < 1 (worst %.3f); flat control identically zero",
             worst));
  return g;
}

// ------------------------------------------------------------- criterion 8

Gate flatness_improvement() {
  Gate g;
  const GridField field = experiment::perturbed_flat_solve_1d(0.01, 800, 100);
  const SpaceTime fb = anchor_point(field, 0.5);
  const std::vector<double> radii{0.3, 0.15, 0.075, 0.0375};
  const auto probe = fbdiag::improvement_of_flatness_probe(field, fb, radii);
  g.require(probe.fitted_exponent > 1.05,
            fmt("fitted deviation exponent %.3f not above 1.05", probe.fitted_exponent));
  g.require(probe.warning.empty(), "probe dropped radii: " + probe.warning);

  GridField linear(1, {field.origin(0)}, {field.step(0)}, {field.nodes(0)},
                   field.t_start(), field.dt(), field.time_nodes());
  for (int k = 0; k < linear.time_nodes(); ++k) {
    for (int i = 0; i < linear.nodes(0); ++i) linear.at(i, k) = linear.coord(0, i);
  }
  const SpaceTime origin{{0.0}, linear.time(linear.time_nodes() - 1)};
  const auto sentinel = fbdiag::improvement_of_flatness_probe(linear, origin, radii);
  bool zeroed = std::isinf(sentinel.fitted_exponent) && sentinel.fitted_exponent > 0.0;
  for (double d : sentinel.deviations) zeroed = zeroed && d < 1e-12;
  g.require(zeroed, "linear field did not return the all-zero sentinel");
  g.note(fmt("deviation exponent %.2f at the extracted boundary point; linear control clean",
             probe.fitted_exponent));
  return g;
}

// ------------------------------------------------------------- criterion 9

Gate barrier_certificates() {
  Gate g;
  std::string landings;
  for (int n : {2, 3}) {
    for (double a_minus : {0.25, 0.5, 1.0}) {
      barrier::BarrierSpec spec;
      spec.n = n;
      spec.a_plus = 1.0;
      spec.a_minus = a_minus;
      spec.delta = 0.01;
      spec.c0 = 0.1;
      const auto report = barrier::subsolution_check(spec, 160);
      g.require(report.passed && report.max_operator_value < 0.0,
                fmt("not certified at n=%d, a_minus=%.2f", n, a_minus));
      g.require(report.c > 0.0, fmt("margin c = %.2e not positive at n=%d, a_minus=%.2f",
                                    report.c, n, a_minus));

      barrier::BarrierSpec weak = spec;
      weak.K = report.K_used / 2.0;
      const double below = barrier::subsolution_scan(weak, 160);
      g.require(below > 0.0,
                fmt("below-threshold K=%.0f still scanned %.2e <= 0 at n=%d, a_minus=%.2f",
                    weak.K, below, n, a_minus));
      landings += fmt("%sK(%d,%.2f)=%.0f", landings.empty() ? "" : " ", n, a_minus,
                      report.K_used);
    }
  }
  g.note(landings);
  return g;
}

// ------------------------------------------------------------ criterion 10

// Erf-profile patch with the inverse sampled analytically (bisection to
// machine precision) on the same pinned image grid the transform builds, so
// second differences of h converge under refinement.
hodograph::HodographPatch analytic_erf_patch(int nx, int nt) {
  const fixtures::TwoPhaseErf fx;
  const double x_lo = -0.5, x_hi = 0.5;
  const double t0 = 0.1, dt = 0.1 / (nt - 1);

  GridField source = sample_1d([&](double x, double t) { return fx(x, t); }, x_lo,
                               x_hi, nx, t0, dt, nt);

  double vmin = -std::numeric_limits<double>::infinity();
  double vmax = std::numeric_limits<double>::infinity();
  for (int k = 0; k < nt; ++k) {
    vmin = std::max(vmin, source.value(0, k));
    vmax = std::min(vmax, source.value(nx - 1, k));
  }

  const int N = nx;
  double dy = (vmax - vmin) / (N - 1);
  const int j0 =
      std::clamp(static_cast<int>(std::llround((0.0 - vmin) / dy)), 1, N - 2);
  dy = std::min((0.0 - vmin) / j0, (vmax - 0.0) / (N - 1 - j0));
  const double y0 = -(j0 * dy);

  GridField h(1, {y0}, {dy}, {N}, t0, dt, nt);
  for (int k = 0; k < nt; ++k) {
    const double t = h.time(k);
    for (int m = 0; m < N; ++m) {
      const double v = h.coord(0, m);
      double a = x_lo, b = x_hi;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (a + b);
        (fx(mid, t) < v ? a : b) = mid;
      }
      h.at(m, k) = 0.5 * (a + b);
    }
  }

  hodograph::HodographPatch patch;
  patch.source = std::move(source);
  patch.h = std::move(h);
  patch.lambda = 0.05;
  patch.lambda_bar = 0.1;
  patch.interface_index = j0;
  return patch;
}

Gate hodograph_round_trip() {
  Gate g;

  // Identity and scaled-linear fixtures invert to rounding error.
  const GridField ident =
      sample_1d([](double x, double) { return x; }, -0.5, 0.5, 101, 0.0, 0.1, 3);
  const auto ident_patch = hodograph::forward_transform(ident, 0.3);
  double ident_err = 0.0;
  for (int k = 0; k < ident_patch.h.time_nodes(); ++k) {
    for (int m = 0; m < ident_patch.h.nodes(0); ++m) {
      ident_err = std::max(ident_err, std::fabs(ident_patch.h.value(m, k) -
                                                ident_patch.h.coord(0, m)));
    }
  }
  const GridField doubled =
      sample_1d([](double x, double) { return 2.0 * x; }, -0.5, 0.5, 101, 0.0, 0.1, 3);
  const auto doubled_patch = hodograph::forward_transform(doubled, 0.3);
  double linear_err = 0.0;
  for (int k = 0; k < doubled_patch.h.time_nodes(); ++k) {
    for (int m = 0; m < doubled_patch.h.nodes(0); ++m) {
      linear_err = std::max(linear_err, std::fabs(doubled_patch.h.value(m, k) -
                                                  doubled_patch.h.coord(0, m) / 2.0));
    }
  }
  g.require(ident_err <= 1e-12, fmt("identity inversion off by %.2e", ident_err));
  g.require(linear_err <= 1e-12, fmt("linear inversion off by %.2e", linear_err));

  // Round trip through a genuinely solved patch.
  const GridField solved = experiment::perturbed_flat_solve_1d(0.01, 200, 50);
  const auto patch = hodograph::forward_transform(solved, 0.3);
  const double hx = solved.step(0);
  // Node ordinates alone would recover exactly (the inverse of a linear
  // interpolant composed with itself), so midpoint ordinates are probed too.
  double round_trip = 0.0;
  for (int k = 0; k < patch.h.time_nodes(); ++k) {
    auto sample_u = [&](double x) {
      int b = static_cast<int>(std::floor((x - solved.origin(0)) / hx));
      b = std::clamp(b, 0, solved.nodes(0) - 2);
      const double frac = (x - solved.coord(0, b)) / hx;
      return solved.value(b, k) + frac * (solved.value(b + 1, k) - solved.value(b, k));
    };
    for (int m = 0; m < patch.h.nodes(0); ++m) {
      round_trip = std::max(
          round_trip, std::fabs(sample_u(patch.h.value(m, k)) - patch.h.coord(0, m)));
      if (m + 1 < patch.h.nodes(0)) {
        const double x_mid = 0.5 * (patch.h.value(m, k) + patch.h.value(m + 1, k));
        const double y_mid = patch.h.coord(0, m) + 0.5 * patch.h.step(0);
        round_trip = std::max(round_trip, std::fabs(sample_u(x_mid) - y_mid));
      }
    }
  }
  g.require(round_trip <= 10.0 * hx * hx,
            fmt("round trip error %.3e exceeds 10 h^2 = %.3e", round_trip, 10.0 * hx * hx));

  // First-order convergence of the identity residuals on transformed
  // patches and of the branch-equation residuals on analytic patches.
  const int levels[3][2] = {{81, 11}, {161, 21}, {321, 41}};
  std::vector<double> identity_errs, equation_errs;
  for (const auto& level : levels) {
    const fixtures::TwoPhaseErf fx;
    const GridField u = sample_1d([&](double x, double t) { return fx(x, t); }, -0.5,
                                  0.5, level[0], 0.1, 0.1 / (level[1] - 1), level[1]);
    const auto transformed = hodograph::forward_transform(u, 0.05);
    const auto ids = hodograph::derivative_identity_check(transformed);
    identity_errs.push_back(std::max(ids.time, ids.gradient));

    const auto analytic = analytic_erf_patch(level[0], level[1]);
    const auto report =
        hodograph::transmission_residual(analytic, fx.a_plus, fx.a_minus);
    equation_errs.push_back(std::max(report.residual_plus, report.residual_minus));
  }
  const double order_floor = std::pow(2.0, 0.9);
  for (int i = 0; i < 2; ++i) {
    g.require(equation_errs[i] / equation_errs[i + 1] >= order_floor,
              fmt("equation residual ratio %.2f below 2^0.9 at level %d",
                  equation_errs[i] / equation_errs[i + 1], i));
  }
  g.require(identity_errs[0] / identity_errs[2] >= order_floor * order_floor,
            fmt("identity residuals improved only %.2fx over two refinements",
                identity_errs[0] / identity_errs[2]));

  // Closed-form coefficient matrix against the assembled product, and the
  // flat-gradient case giving exactly the identity.
  std::mt19937 rng(2026u);
  std::uniform_real_distribution<double> slope(-3.0, 3.0), normal(0.2, 2.0);
  double worst_product_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 2;
    std::vector<double> p(n);
    for (int i = 0; i + 1 < n; ++i) p[i] = slope(rng);
    p[n - 1] = (trial % 3 == 0 ? -1.0 : 1.0) * normal(rng);
    const auto coeffs = hodograph::coefficient_matrix(p);

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) a(n - 1, i) = -p[i] / p[n - 1];
    a(n - 1, n - 1) = 1.0 / p[n - 1];
    const Eigen::MatrixXd product = a.transpose() * a;
    const double scale = std::max(1.0, product.cwiseAbs().maxCoeff());
    worst_product_gap = std::max(
        worst_product_gap, (coeffs.B - product).cwiseAbs().maxCoeff() / scale);
  }
  g.require(worst_product_gap <= 1e-14,
            fmt("coefficient matrix off the product by %.2e", worst_product_gap));
  const auto en = hodograph::coefficient_matrix({0.0, 0.0, 1.0});
  bool en_identity = true;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      en_identity = en_identity && en.B(i, j) == (i == j ? 1.0 : 0.0);
    }
  }
  g.require(en_identity, "B(e_n) is not exactly the identity");

  g.note(fmt("round trip %.1e (cap %.1e); residual ratios %.2f, %.2f per refinement",
             round_trip, 10.0 * hx * hx, equation_errs[0] / equation_errs[1],
             equation_errs[1] / equation_errs[2]));
  return g;
}

// ------------------------------------------------------------ criterion 11

Gate hausdorff_convergence() {
  Gate g;
  std::mt19937 rng(11u);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 12);

  std::vector<PointSet> sets(1000);
  for (auto& s : sets) {
    const int m = count(rng);
    for (int i = 0; i < m; ++i) s.points.push_back({coord(rng), coord(rng), coord(rng)});
  }
  bool axioms = true;
  for (std::size_t i = 0; i + 2 < sets.size() && axioms; ++i) {
    const PointSet& a = sets[i];
    const PointSet& b = sets[i + 1];
    const PointSet& c = sets[i + 2];
    const double dab = hausdorff_distance(a, b);
    axioms = axioms && hausdorff_distance(a, a) == 0.0;
    axioms = axioms && dab == hausdorff_distance(b, a);
    axioms = axioms && dab > 0.0;
    axioms = axioms &&
             dab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12;
  }
  g.require(axioms, "metric axioms violated on the random sets");

  // Vertically perturbing a graph by at most delta moves it at most delta.
  const GridField base = sample_1d(
      [](double x, double) { return 0.3 * std::sin(2.0 * x); }, -1.0, 1.0, 401, -0.2,
      0.1, 3);
  const ParabolicCylinder window{{0.0}, 0.0, 1.5};
  const PointSet reference = graph_to_pointset(base, window);
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 12; ++k) {
    const double delta = std::pow(2.0, -k);
    GridField shifted = base;
    for (int kk = 0; kk < shifted.time_nodes(); ++kk) {
      for (int i = 0; i < shifted.nodes(0); ++i) {
        shifted.at(i, kk) += delta * std::sin(7.0 * shifted.coord(0, i) + 0.3);
      }
    }
    const double d = hausdorff_distance(reference, graph_to_pointset(shifted, window));
    worst_excess = std::max(worst_excess, d - delta);
    g.require(d <= delta, fmt("graph distance %.3e exceeds delta_k = %.3e", d, delta));
  }
  g.note(fmt("998 random triples satisfy the axioms; graph distances within delta "
             "down to 2^-12 (worst slack %.1e)",
             -worst_excess));
  return g;
}

struct Criterion {
  const char* label;
  double time_cap_seconds;  // 0 means no cap
  Gate (*run)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"closed-form scaled zeros", 1.0, closed_form_zeros},
      {"exponent threshold and vanishing", 30.0, exponent_threshold},
      {"matched profile certification", 10.0, profile_certification},
      {"gradient blow-up scaling", 5.0, gradient_blowup},
      {"linear transmission exactness", 120.0, linear_transmission_exactness},
      {"self-similar evolution oracle", 120.0, selfsim_evolution_oracle},
      {"oscillation decay at the interface", 0.0, harnack_oscillation_decay},
      {"improvement of flatness", 0.0, flatness_improvement},
      {"barrier subsolution certificates", 30.0, barrier_certificates},
      {"hodograph round trip and residuals", 0.0, hodograph_round_trip},
      {"hausdorff metric and graph convergence", 0.0, hausdorff_convergence},
  };

  int failed = 0;
  int index = 0;
  for (const auto& criterion : criteria) {
    ++index;
    Gate gate;
    const auto start = std::chrono::steady_clock::now();
    try {
      gate = criterion.run();
    } catch (const std::exception& e) {
      gate.ok = false;
      gate.append(std::string("threw: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.time_cap_seconds > 0.0 && elapsed >= criterion.time_cap_seconds) {
      gate.ok = false;
      gate.append(fmt("FAILED: runtime %.1fs over the %.0fs cap", elapsed,
                      criterion.time_cap_seconds));
    }
    if (!gate.ok) ++failed;
    std::printf("[%2d] %s  %s: %s [%.1fs]\n", index, gate.ok ? "PASS" : "FAIL",
                criterion.label, gate.detail.c_str(), elapsed);
    std::fflush(stdout);
  }

  if (failed == 0) {
    std::printf("ACCEPTANCE: all 11 criteria passed\n");
    return 0;
  }
  std::printf("ACCEPTANCE: %d of 11 criteria FAILED\n", failed);
  return 1;
}
