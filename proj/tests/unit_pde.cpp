#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "fblab/pde.hpp"
#include "fblab/selfsim.hpp"
#include "fixtures.hpp"

using namespace fblab;
using namespace fblab::pde;

namespace {

double heat_kernel(double x, double t) {
  return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * M_PI * t);
}

double sup_error_1d(const GridField& field, const SpaceFn& exact, int k) {
  double worst = 0.0;
  for (int i = 0; i < field.nodes(0); ++i) {
    const std::vector<double> x{field.coord(0, i)};
    worst = std::max(worst, std::fabs(field.value(i, k) - exact(x, field.time(k))));
  }
  return worst;
}

double sup_error_2d(const GridField& field, const SpaceFn& exact, int k) {
  double worst = 0.0;
  for (int j = 0; j < field.nodes(1); ++j) {
    for (int i = 0; i < field.nodes(0); ++i) {
      const std::vector<double> x{field.coord(0, i), field.coord(1, j)};
      worst = std::max(worst, std::fabs(field.value(i, j, k) - exact(x, field.time(k))));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("regularized coefficient: plateaus, midpoint, bounds, monotonicity") {
  const auto a = regularized_coefficient({2.0, 0.5, 0.3});
  CHECK(a(-0.6) == 0.5);
  CHECK(a(-0.3) == 0.5);
  CHECK(a(0.3) == 2.0);
  CHECK(a(0.6) == 2.0);
  CHECK(a(0.0) == doctest::Approx(1.25).epsilon(1e-14));

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> span(-5.0, 5.0);
  for (int trial = 0; trial < 10000; ++trial) {
    double s1 = span(rng), s2 = span(rng);
    if (s1 > s2) std::swap(s1, s2);
    const double v1 = a(s1), v2 = a(s2);
    CHECK(v1 >= 0.5);
    CHECK(v2 <= 2.0);
    CHECK(v1 <= v2 + 1e-15);
  }

  // Reversed plateaus stay inside their hull as well, mirrored.
  const auto down = regularized_coefficient({0.5, 2.0, 0.1});
  CHECK(down(-1.0) == 2.0);
  CHECK(down(1.0) == 0.5);
  CHECK(down(0.02) <= down(-0.02));

  CHECK_THROWS_AS(regularized_coefficient({1.0, 1.0, 0.0}), argument_error);
  CHECK_THROWS_AS(regularized_coefficient({-1.0, 1.0, 0.1}), argument_error);
}

TEST_CASE("regularized ramp joins its plateaus twice differentiably") {
  const double w = 0.5;
  CHECK(regularized_ramp(-w, w) == 0.0);
  CHECK(regularized_ramp(w, w) == 1.0);
  // First and second divided differences shrink toward the joins;
  // the quintic profile has ramp'(+-w) = ramp''(+-w) = 0.
  for (double gap : {1e-2, 1e-3}) {
    const double inner = regularized_ramp(-w + gap, w);
    CHECK(inner / gap < 0.1);
    const double d2 = (regularized_ramp(-w + 2 * gap, w) - 2 * inner) / (gap * gap);
    CHECK(std::fabs(d2) < 1.0);
  }
}

TEST_CASE("piecewise quadratic: structure validation") {
  auto q = fixtures::CompatibleQuadratic::make_2d();
  CHECK_NOTHROW(q.P.validate());

  PiecewiseQuadratic bad = q.P;
  bad.A_minus(0, 0) = 7.0;
  CHECK_THROWS_AS(bad.validate(), argument_error);

  PiecewiseQuadratic asym = q.P;
  asym.A_plus(0, 1) = 0.9;
  CHECK_THROWS_AS(asym.validate(), argument_error);

  PiecewiseQuadratic sized = q.P;
  sized.b = Eigen::VectorXd{{1.0}};
  CHECK_THROWS_AS(sized.validate(), argument_error);
}

TEST_CASE("piecewise quadratic: evaluation and interface matching") {
  PiecewiseQuadratic plane;
  plane.A_plus = Eigen::MatrixXd::Zero(2, 2);
  plane.A_minus = Eigen::MatrixXd::Zero(2, 2);
  plane.b = Eigen::VectorXd{{0.0, 1.0}};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> span(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x{span(rng), span(rng)};
    CHECK(piecewise_quadratic_eval(plane, x, span(rng)) == x[1]);
  }

  const auto q = fixtures::CompatibleQuadratic::make_2d();
  // Continuity across the interface.
  const double above = piecewise_quadratic_eval(q.P, {0.7, 1e-9}, 0.3);
  const double below = piecewise_quadratic_eval(q.P, {0.7, -1e-9}, 0.3);
  CHECK(std::fabs(above - below) < 1e-8);

  // One-sided normal slopes agree in the limit: both equal b_n + A_n1 x_1.
  const double h = 1e-6;
  const double x1 = 0.7;
  const double base = piecewise_quadratic_eval(q.P, {x1, 0.0}, 0.0);
  const double up = (piecewise_quadratic_eval(q.P, {x1, h}, 0.0) - base) / h;
  const double down = (base - piecewise_quadratic_eval(q.P, {x1, -h}, 0.0)) / h;
  const double expected = q.P.b(1) + q.P.A_plus(1, 0) * x1;
  CHECK(up == doctest::Approx(expected).epsilon(1e-5));
  CHECK(down == doctest::Approx(expected).epsilon(1e-5));

  CHECK_THROWS_AS(piecewise_quadratic_eval(q.P, {1.0}, 0.0), argument_error);
}

TEST_CASE("pucci operators: hand values") {
  const Eigen::MatrixXd id3 = Eigen::MatrixXd::Identity(3, 3);
  CHECK(pucci_minus(id3, 1.0, 2.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(pucci_plus(id3, 1.0, 2.0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(pucci_minus(Eigen::MatrixXd::Zero(2, 2), 1.0, 2.0) == 0.0);

  Eigen::MatrixXd saddle{{1.0, 0.0}, {0.0, -1.0}};
  CHECK(pucci_minus(saddle, 1.0, 2.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(pucci_plus(saddle, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::MatrixXd skew{{0.0, 1.0}, {-1.0, 0.0}};
  CHECK_THROWS_AS(pucci_minus(skew, 1.0, 2.0), argument_error);
  CHECK_THROWS_AS(pucci_plus(id3, 0.0, 2.0), argument_error);
  CHECK_THROWS_AS(pucci_plus(id3, 2.0, 1.0), argument_error);
}

TEST_CASE("pucci operators bracket tr(AM) over the ellipticity class") {
  const double lambda = 0.7, Lambda = 2.3;
  std::mt19937 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> inwindow(lambda, Lambda);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd G(3, 3);
    for (int i = 0; i < 9; ++i) G(i / 3, i % 3) = gauss(rng);
    const Eigen::MatrixXd M = G + G.transpose();

    const double lo = pucci_minus(M, lambda, Lambda);
    const double hi = pucci_plus(M, lambda, Lambda);
    CHECK(lo <= hi + 1e-12);

    // Random admissible coefficient matrix A = Q diag(d) Q^T.
    Eigen::MatrixXd H(3, 3);
    for (int i = 0; i < 9; ++i) H(i / 3, i % 3) = gauss(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(H);
    const Eigen::MatrixXd Q = qr.householderQ();
    Eigen::VectorXd d(3);
    for (int i = 0; i < 3; ++i) d(i) = inwindow(rng);
    const Eigen::MatrixXd A = Q * d.asDiagonal() * Q.transpose();

    const double trace_form = (A * M).trace();
    CHECK(trace_form >= lo - 1e-10);
    CHECK(trace_form <= hi + 1e-10);
  }
}

TEST_CASE("linear transmission solver reproduces a compatible quadratic (1D)") {
  const auto q = fixtures::CompatibleQuadratic::make_1d();
  const SpaceTimeBox box{{-1.0}, {1.0}, -1.0, 0.0};

  const auto run = [&](int cells, int tsteps, double w) {
    std::vector<StepLogEntry> log;
    const GridField field =
        solve_linear_transmission(q.spec(), box, q.exact(), {{cells}, tsteps}, w, &log);
    CHECK(static_cast<int>(log.size()) == tsteps);
    double worst = 0.0;
    for (int k = 0; k <= tsteps; ++k) worst = std::max(worst, sup_error_1d(field, q.exact(), k));
    return worst;
  };

  // Width tied to the mesh at the recommended two cells; the error then
  // shrinks like w^2 and halving everything gives a factor close to 4.
  const double h = 1.0 / 16.0;
  const double coarse = run(32, 16, 2.0 * h);
  const double fine = run(64, 32, h);
  CHECK(coarse <= 5.0 * (h * h + 2.0 * h));
  CHECK(coarse / fine >= 3.0);
}

TEST_CASE("linear transmission solver reproduces a compatible quadratic (2D)") {
  const auto q = fixtures::CompatibleQuadratic::make_2d();
  const SpaceTimeBox box{{-1.0, -1.0}, {1.0, 1.0}, -1.0, 0.0};
  const int cells = 24, tsteps = 12;
  const double h = 2.0 / cells, w = 0.08;
  const GridField field =
      solve_linear_transmission(q.spec(), box, q.exact(), {{cells, cells}, tsteps}, w);
  double worst = 0.0;
  for (int k = 0; k <= tsteps; ++k) worst = std::max(worst, sup_error_2d(field, q.exact(), k));
  CHECK(worst <= 5.0 * (h * h + w));
}

TEST_CASE("linear transmission solver matches the heat kernel when phases agree") {
  TransmissionSpec spec;  // identity everything, zero sources
  spec.a_plus = spec.a_minus = 1.0;
  const SpaceFn exact = [](const std::vector<double>& x, double t) {
    return heat_kernel(x[0], t);
  };
  const SpaceTimeBox box{{-1.0}, {1.0}, 0.1, 0.2};

  const auto run = [&](int cells, int tsteps) {
    const GridField field = solve_linear_transmission(spec, box, exact, {{cells}, tsteps}, 0.1);
    return sup_error_1d(field, exact, tsteps);
  };
  const double coarse = run(32, 400);
  const double fine = run(64, 800);
  CHECK(coarse < 0.01);
  CHECK(coarse / fine >= 3.0);
}

TEST_CASE("linear transmission solver: zero data gives the zero field") {
  TransmissionSpec spec;
  spec.a_plus = 1.7;
  spec.a_minus = 0.4;
  const SpaceFn zero = [](const std::vector<double>&, double) { return 0.0; };
  const GridField field =
      solve_linear_transmission(spec, {{-1.0}, {1.0}, 0.0, 1.0}, zero, {{16}, 8}, 0.1);
  for (double v : field.raw()) CHECK(v == 0.0);
}

TEST_CASE("linear transmission solver: comparison on ordered boundary data") {
  TransmissionSpec spec;
  spec.a_plus = 1.0;
  spec.a_minus = 0.3;
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> coefs(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    const double p = coefs(rng), r = coefs(rng), s = coefs(rng);
    const SpaceFn g1 = [p, r, s](const std::vector<double>& x, double t) {
      return p * std::sin(3.0 * x[0]) + r * x[0] + s * t;
    };
    const SpaceFn g2 = [g1](const std::vector<double>& x, double t) {
      return g1(x, t) + 0.1 * (1.2 + std::sin(5.0 * x[0]));
    };
    const SpaceTimeBox box{{-1.0}, {1.0}, 0.0, 0.5};
    const GridField u1 = solve_linear_transmission(spec, box, g1, {{24}, 12}, 0.1);
    const GridField u2 = solve_linear_transmission(spec, box, g2, {{24}, 12}, 0.1);
    for (std::size_t q = 0; q < u1.raw().size(); ++q) {
      CHECK(u1.raw()[q] <= u2.raw()[q] + 1e-12);
    }
  }
}

TEST_CASE("linear transmission solver screens coefficient samples") {
  TransmissionSpec spec;
  spec.ell_lo = 1.0;
  spec.ell_hi = 2.0;
  spec.coeff_field = [](const std::vector<double>&, double) {
    return Eigen::MatrixXd{{1.0, 0.0}, {0.0, 3.0}};
  };
  const SpaceFn zero = [](const std::vector<double>&, double) { return 0.0; };
  const SpaceTimeBox box{{-1.0, -1.0}, {1.0, 1.0}, 0.0, 1.0};
  CHECK_THROWS_AS(solve_linear_transmission(spec, box, zero, {{8, 8}, 2}, 0.1),
                  argument_error);

  spec.coeff_field = [](const std::vector<double>&, double) {
    return Eigen::MatrixXd{{1.0, 0.5}, {0.0, 1.0}};
  };
  CHECK_THROWS_AS(solve_linear_transmission(spec, box, zero, {{8, 8}, 2}, 0.1),
                  argument_error);
}

TEST_CASE("linear transmission solver validates shapes") {
  TransmissionSpec spec;
  const SpaceFn zero = [](const std::vector<double>&, double) { return 0.0; };
  CHECK_THROWS_AS(
      solve_linear_transmission(spec, {{-1.0}, {1.0}, 1.0, 0.0}, zero, {{8}, 2}, 0.1),
      argument_error);
  CHECK_THROWS_AS(
      solve_linear_transmission(spec, {{-1.0}, {1.0}, 0.0, 1.0}, zero, {{1}, 2}, 0.1),
      argument_error);
  CHECK_THROWS_AS(
      solve_linear_transmission(spec, {{-1.0}, {1.0}, 0.0, 1.0}, zero, {{8, 8}, 2}, 0.1),
      argument_error);
  CHECK_THROWS_AS(
      solve_linear_transmission(spec, {{-1.0}, {1.0}, 0.0, 1.0}, zero, {{8}, 2}, -0.1),
      argument_error);
}

TEST_CASE("second differences stay bounded on each side under refinement") {
  TransmissionSpec spec;
  spec.a_plus = 1.0;
  spec.a_minus = 0.3;
  const SpaceFn data = [](const std::vector<double>& x, double t) {
    return std::sin(2.0 * x[0] - t);
  };
  const SpaceTimeBox box{{-1.0}, {1.0}, 0.0, 0.5};

  const auto second_diff_sup = [&](int cells, double w) {
    const GridField f = solve_linear_transmission(spec, box, data, {{cells}, cells}, w);
    const double h = f.step(0);
    double worst = 0.0;
    const int k = f.time_nodes() - 1;
    for (int i = 1; i + 1 < f.nodes(0); ++i) {
      if (std::fabs(f.coord(0, i)) < 0.25) continue;
      const double d2 = (f.value(i + 1, k) - 2.0 * f.value(i, k) + f.value(i - 1, k)) / (h * h);
      worst = std::max(worst, std::fabs(d2));
    }
    return worst;
  };

  const double coarse = second_diff_sup(32, 0.1);
  const double fine = second_diff_sup(64, 0.05);
  CHECK(coarse > 0.1);
  CHECK(fine <= 1.5 * coarse);
}

TEST_CASE("nonlinear solver: equal phases reduce to the heat equation") {
  const SpaceFn exact = [](const std::vector<double>& x, double t) {
    return heat_kernel(x[0], t);
  };
  const GridField field = solve_nonlinear(1.0, 1.0, {{-1.0}, {1.0}, 0.1, 0.2}, exact,
                                          {{64}, 200}, 0.1);
  CHECK(sup_error_1d(field, exact, field.time_nodes() - 1) < 0.01);
}

TEST_CASE("nonlinear solver keeps a flat interface flat (2D)") {
  NonlinearOptions opts;
  opts.geometry = Geometry::cartesian2d;
  const SpaceFn plane = [](const std::vector<double>& x, double) { return x[1]; };
  const GridField field = solve_nonlinear(1.0, 0.25, {{-0.5, -0.5}, {0.5, 0.5}, 0.0, 0.3},
                                          plane, {{12, 12}, 6}, 0.1, opts);
  for (int k = 0; k < field.time_nodes(); ++k) {
    for (int j = 0; j < field.nodes(1); ++j) {
      for (int i = 0; i < field.nodes(0); ++i) {
        CHECK(std::fabs(field.value(i, j, k) - field.coord(1, j)) < 1e-9);
      }
    }
  }
}

TEST_CASE("nonlinear solver tracks the exact two-phase erf profile") {
  const fixtures::TwoPhaseErf oracle;
  const SpaceFn data = [&oracle](const std::vector<double>& x, double t) {
    return oracle(x[0], t);
  };
  const SpaceTimeBox box{{-1.0}, {1.0}, 0.0, 0.25};

  const auto run = [&](int cells, int tsteps, double w) {
    const GridField field =
        solve_nonlinear(oracle.a_plus, oracle.a_minus, box, data, {{cells}, tsteps}, w);
    double worst = 0.0;
    for (int k = 0; k <= tsteps; ++k) worst = std::max(worst, sup_error_1d(field, data, k));
    return worst;
  };

  const double coarse = run(128, 64, 2.0 / 64.0);
  const double fine = run(256, 128, 1.0 / 64.0);
  CHECK(coarse < 0.01);
  CHECK(coarse / fine >= 1.4);
}

TEST_CASE("nonlinear radial solve follows the self-similar oracle") {
  const auto match = selfsim::solve_alpha(3, 0.1);
  const auto profile = selfsim::build_profile(match);
  const SpaceFn data = [&profile](const std::vector<double>& x, double t) {
    return selfsim::evaluate_u(profile, x, t);
  };
  NonlinearOptions opts;
  opts.geometry = Geometry::radial1d;
  opts.radial_n = 3;
  const GridField field =
      solve_nonlinear(1.0, profile.eps, {{0.0}, {4.0}, -1.0, -0.5}, data, {{512}, 250},
                      0.02, opts);

  double worst = 0.0;
  const int k = field.time_nodes() - 1;
  for (int i = 0; i < field.nodes(0); ++i) {
    const double r = field.coord(0, i);
    if (r < 0.05 || r > 2.0) continue;
    const std::vector<double> x{r};
    worst = std::max(worst, std::fabs(field.value(i, k) - data(x, field.time(k))));
  }
  CHECK(worst < 0.03);
}

TEST_CASE("nonlinear solver reports coefficient-iteration stalls with history") {
  const fixtures::TwoPhaseErf oracle;
  const SpaceFn data = [&oracle](const std::vector<double>& x, double t) {
    return oracle(x[0], t);
  };
  NonlinearOptions opts;
  opts.max_coefficient_iters = 1;
  opts.coefficient_tol = 0.0;
  CHECK_THROWS_AS(solve_nonlinear(oracle.a_plus, oracle.a_minus,
                                  {{-1.0}, {1.0}, 0.0, 0.25}, data, {{64}, 5}, 0.05, opts),
                  numeric_error);
}

TEST_CASE("nonlinear solver validates geometry input") {
  const SpaceFn zero = [](const std::vector<double>&, double) { return 0.0; };
  NonlinearOptions radial;
  radial.geometry = Geometry::radial1d;
  CHECK_THROWS_AS(
      solve_nonlinear(1.0, 1.0, {{0.5}, {1.0}, 0.0, 1.0}, zero, {{8}, 2}, 0.1, radial),
      argument_error);
  NonlinearOptions planar;
  planar.geometry = Geometry::cartesian2d;
  CHECK_THROWS_AS(
      solve_nonlinear(1.0, 1.0, {{0.0}, {1.0}, 0.0, 1.0}, zero, {{8}, 2}, 0.1, planar),
      argument_error);
  CHECK_THROWS_AS(
      solve_nonlinear(1.0, -1.0, {{0.0}, {1.0}, 0.0, 1.0}, zero, {{8}, 2}, 0.1),
      argument_error);
}

TEST_CASE("pucci sandwich holds on an exact quadratic and flags corruption") {
  const auto q = fixtures::CompatibleQuadratic::make_2d();
  TransmissionSpec spec = q.spec();
  const double fbar_c = std::max(q.f_plus() / q.a_plus, q.f_minus() / q.a_minus);
  const double funder_c = std::min(q.f_plus() / q.a_plus, q.f_minus() / q.a_minus);
  const SpaceFn fbar = [fbar_c](const std::vector<double>&, double) { return fbar_c; };
  const SpaceFn funder = [funder_c](const std::vector<double>&, double) { return funder_c; };

  GridField field(2, {-1.0, -1.0}, {0.1, 0.1}, {21, 21}, 0.0, 0.05, 11);
  for (int k = 0; k < field.time_nodes(); ++k) {
    for (int j = 0; j < field.nodes(1); ++j) {
      for (int i = 0; i < field.nodes(0); ++i) {
        field.at(i, j, k) = piecewise_quadratic_eval(
            q.P, {field.coord(0, i), field.coord(1, j)}, field.time(k));
      }
    }
  }
  CHECK(pucci_sandwich_check(field, spec, fbar, funder) <= 1e-9);

  GridField broken = field;
  for (int k = 0; k < broken.time_nodes(); ++k) {
    for (int j = 0; j < broken.nodes(1); ++j) {
      for (int i = 0; i < broken.nodes(0); ++i) {
        const double xn = broken.coord(1, j);
        broken.at(i, j, k) += 5.0 * xn * xn * (broken.coord(0, i) > 0.0 ? 1.0 : -1.0);
      }
    }
  }
  CHECK(pucci_sandwich_check(broken, spec, fbar, funder) > 0.1);
}

TEST_CASE("pucci sandwich is slack on a solved transmission field") {
  const auto q = fixtures::CompatibleQuadratic::make_2d();
  const int cells = 24, tsteps = 12;
  const double h = 2.0 / cells;
  const GridField field = solve_linear_transmission(
      q.spec(), {{-1.0, -1.0}, {1.0, 1.0}, -1.0, 0.0}, q.exact(), {{cells, cells}, tsteps},
      1.5 * h);
  const double fbar_c = std::max(q.f_plus() / q.a_plus, q.f_minus() / q.a_minus);
  const double funder_c = std::min(q.f_plus() / q.a_plus, q.f_minus() / q.a_minus);
  const SpaceFn fbar = [fbar_c](const std::vector<double>&, double) { return fbar_c; };
  const SpaceFn funder = [funder_c](const std::vector<double>&, double) { return funder_c; };
  CHECK(pucci_sandwich_check(field, q.spec(), fbar, funder) <= 1e-8);
}
