#include "fblab/pde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace fblab::pde {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) {
    std::ostringstream msg;
    msg << what << " must be positive, got " << v;
    throw argument_error(msg.str());
  }
}

void require_symmetric_square(const Eigen::MatrixXd& M, const char* who) {
  if (M.rows() == 0 || M.rows() != M.cols()) {
    throw argument_error(std::string(who) + ": matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw argument_error(std::string(who) + ": matrix is not symmetric");
  }
}

double timer_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double regularized_ramp(double s, double width) {
  require_positive(width, "ramp width");
  if (s <= -width) return 0.0;
  if (s >= width) return 1.0;
  const double t = (s + width) / (2.0 * width);
  // Quintic step: vanishing first and second derivatives at both ends keep
  // the blended coefficient twice continuously differentiable.
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

std::function<double(double)> regularized_coefficient(const RegularizedCoefficient& spec) {
  require_positive(spec.a_plus, "a_plus");
  require_positive(spec.a_minus, "a_minus");
  require_positive(spec.width, "coefficient width");
  const double lo = spec.a_minus, hi = spec.a_plus, w = spec.width;
  return [lo, hi, w](double s) { return lo + (hi - lo) * regularized_ramp(s, w); };
}

void PiecewiseQuadratic::validate() const {
  const Eigen::Index n = b.size();
  if (n < 1) throw argument_error("piecewise quadratic: empty gradient vector");
  if (A_plus.rows() != n || A_plus.cols() != n || A_minus.rows() != n ||
      A_minus.cols() != n) {
    throw argument_error("piecewise quadratic: matrix sizes disagree with b");
  }
  require_symmetric_square(A_plus, "piecewise quadratic");
  require_symmetric_square(A_minus, "piecewise quadratic");
  const double scale =
      std::max({1.0, A_plus.cwiseAbs().maxCoeff(), A_minus.cwiseAbs().maxCoeff()});
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == n - 1 && j == n - 1) continue;
      if (std::fabs(A_plus(i, j) - A_minus(i, j)) > 1e-14 * scale) {
        throw argument_error(
            "piecewise quadratic: the branch Hessians may differ only in the "
            "nn entry");
      }
    }
  }
}

double piecewise_quadratic_eval(const PiecewiseQuadratic& P,
                                const std::vector<double>& x, double t) {
  const Eigen::Index n = P.b.size();
  if (static_cast<Eigen::Index>(x.size()) != n) {
    throw argument_error("piecewise quadratic: point dimension mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  const Eigen::MatrixXd& A = x[static_cast<std::size_t>(n - 1)] >= 0.0 ? P.A_plus : P.A_minus;
  return 0.5 * xv.dot(A * xv) + P.b.dot(xv) + P.c * t + P.d;
}

namespace {

double pucci(const Eigen::MatrixXd& M, double lambda, double Lambda, bool minimal) {
  if (!(lambda > 0.0) || !(Lambda >= lambda)) {
    throw argument_error("pucci: need 0 < lambda <= Lambda");
  }
  require_symmetric_square(M, "pucci");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  double out = 0.0;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    const double e = es.eigenvalues()[i];
    const double weight = (e > 0.0) == minimal ? lambda : Lambda;
    out += weight * e;
  }
  return out;
}

}  // namespace

double pucci_minus(const Eigen::MatrixXd& M, double lambda, double Lambda) {
  return pucci(M, lambda, Lambda, true);
}

double pucci_plus(const Eigen::MatrixXd& M, double lambda, double Lambda) {
  return pucci(M, lambda, Lambda, false);
}

double pucci_sandwich_check(const GridField& field, const TransmissionSpec& spec,
                            const SpaceFn& fbar, const SpaceFn& funder) {
  require_positive(spec.a_plus, "a_plus");
  require_positive(spec.a_minus, "a_minus");
  require_positive(spec.ell_lo, "ell_lo");
  if (!(spec.ell_hi >= spec.ell_lo)) {
    throw argument_error("ellipticity window is empty");
  }
  const int dim = field.dim();
  if (dim < 1 || dim > 2) {
    throw argument_error("sandwich check supports 1 or 2 spatial dimensions");
  }
  if (field.time_nodes() < 2) {
    throw argument_error("sandwich check needs at least two time levels");
  }
  const double lambda = spec.ell_lo / std::max(spec.a_plus, spec.a_minus);
  const double Lambda = spec.ell_hi / std::min(spec.a_plus, spec.a_minus);
  const double hn = field.step(dim - 1);
  const double dt = field.dt();

  double worst = -1e300;
  bool any = false;
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (int k = 1; k < field.time_nodes(); ++k) {
    const double t = field.time(k);
    if (dim == 1) {
      for (int i = 1; i + 1 < field.nodes(0); ++i) {
        const double xn = field.coord(0, i);
        if (std::fabs(xn) <= 2.0 * hn) continue;
        x[0] = xn;
        Eigen::MatrixXd D2(1, 1);
        D2(0, 0) = (field.value(i + 1, k) - 2.0 * field.value(i, k) +
                    field.value(i - 1, k)) /
                   (hn * hn);
        const double wt = (field.value(i, k) - field.value(i, k - 1)) / dt;
        const double hi_gap = wt - pucci_plus(D2, lambda, Lambda) - (fbar ? fbar(x, t) : 0.0);
        const double lo_gap = (funder ? funder(x, t) : 0.0) + pucci_minus(D2, lambda, Lambda) - wt;
        worst = std::max({worst, hi_gap, lo_gap});
        any = true;
      }
    } else {
      const double h0 = field.step(0), h1 = field.step(1);
      for (int j = 1; j + 1 < field.nodes(1); ++j) {
        const double xn = field.coord(1, j);
        if (std::fabs(xn) <= 2.0 * hn) continue;
        for (int i = 1; i + 1 < field.nodes(0); ++i) {
          x[0] = field.coord(0, i);
          x[1] = xn;
          Eigen::MatrixXd D2(2, 2);
          D2(0, 0) = (field.value(i + 1, j, k) - 2.0 * field.value(i, j, k) +
                      field.value(i - 1, j, k)) /
                     (h0 * h0);
          D2(1, 1) = (field.value(i, j + 1, k) - 2.0 * field.value(i, j, k) +
                      field.value(i, j - 1, k)) /
                     (h1 * h1);
          D2(0, 1) = D2(1, 0) =
              (field.value(i + 1, j + 1, k) + field.value(i - 1, j - 1, k) -
               field.value(i + 1, j - 1, k) - field.value(i - 1, j + 1, k)) /
              (4.0 * h0 * h1);
          const double wt = (field.value(i, j, k) - field.value(i, j, k - 1)) / dt;
          const double hi_gap = wt - pucci_plus(D2, lambda, Lambda) - (fbar ? fbar(x, t) : 0.0);
          const double lo_gap = (funder ? funder(x, t) : 0.0) + pucci_minus(D2, lambda, Lambda) - wt;
          worst = std::max({worst, hi_gap, lo_gap});
          any = true;
        }
      }
    }
  }
  if (!any) {
    throw argument_error("sandwich check: the interface band excludes every interior node");
  }
  return worst;
}

namespace {

// Shared bookkeeping for the implicit steppers: a uniform lattice over the
// box with a row index for every unknown node.
struct Lattice {
  int dim = 0;
  std::vector<int> nodes;
  std::vector<double> h;
  double dt = 0.0;

  int n0() const { return nodes[0]; }
  int n1() const { return dim > 1 ? nodes[1] : 1; }
};

Lattice make_lattice(const SpaceTimeBox& domain, const SolveSteps& steps, int want_dim) {
  if (static_cast<int>(domain.lo.size()) != want_dim ||
      static_cast<int>(domain.hi.size()) != want_dim ||
      static_cast<int>(steps.space.size()) != want_dim) {
    throw argument_error("domain/steps dimension mismatch");
  }
  if (!(domain.t1 > domain.t0)) throw argument_error("time interval is empty");
  if (steps.time < 1) throw argument_error("need at least one time step");
  Lattice g;
  g.dim = want_dim;
  for (int a = 0; a < want_dim; ++a) {
    if (!(domain.hi[a] > domain.lo[a])) throw argument_error("box is empty along an axis");
    if (steps.space[a] < 2) throw argument_error("need at least two cells per axis");
    g.nodes.push_back(steps.space[a] + 1);
    g.h.push_back((domain.hi[a] - domain.lo[a]) / steps.space[a]);
  }
  g.dt = (domain.t1 - domain.t0) / steps.time;
  return g;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

struct LinearStepSolver {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Triplets cached;
  bool ready = false;

  // Factors only when the assembled matrix changed since the last step;
  // constant-coefficient problems pay for a single factorization.
  void refresh(int rows, Triplets& trips) {
    if (ready && trips.size() == cached.size()) {
      bool same = true;
      for (std::size_t q = 0; q < trips.size(); ++q) {
        if (trips[q].row() != cached[q].row() || trips[q].col() != cached[q].col() ||
            trips[q].value() != cached[q].value()) {
          same = false;
          break;
        }
      }
      if (same) return;
    }
    Eigen::SparseMatrix<double> A(rows, rows);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
      throw numeric_error("linear step matrix is singular");
    }
    cached = trips;
    ready = true;
  }

  Eigen::VectorXd solve_checked(const Eigen::VectorXd& rhs, int step) {
    Eigen::VectorXd v = lu.solve(rhs);
    Eigen::SparseMatrix<double> A(rhs.size(), rhs.size());
    A.setFromTriplets(cached.begin(), cached.end());
    const double resid = (A * v - rhs).lpNorm<Eigen::Infinity>();
    const double bound = 1e-10 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    if (!(resid <= bound)) {
      std::ostringstream msg;
      msg << "linear solve stalled at step " << step << ": residual " << resid
          << " exceeds " << bound;
      throw numeric_error(msg.str());
    }
    last_residual = resid;
    return v;
  }

  double last_residual = 0.0;
};

void check_ellipticity_sample(const Eigen::MatrixXd& A, const TransmissionSpec& spec) {
  require_symmetric_square(A, "coefficient field");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const double tol = 1e-9 * std::max(1.0, spec.ell_hi);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (emin < spec.ell_lo - tol || emax > spec.ell_hi + tol) {
    std::ostringstream msg;
    msg << "coefficient sample with eigenvalue range [" << emin << ", " << emax
        << "] leaves the declared ellipticity window [" << spec.ell_lo << ", "
        << spec.ell_hi << "]";
    throw argument_error(msg.str());
  }
}

}  // namespace

GridField solve_linear_transmission(const TransmissionSpec& spec,
                                    const SpaceTimeBox& domain,
                                    const SpaceFn& boundary_data,
                                    const SolveSteps& steps, double reg_width,
                                    std::vector<StepLogEntry>* log) {
  require_positive(spec.a_plus, "a_plus");
  require_positive(spec.a_minus, "a_minus");
  require_positive(spec.ell_lo, "ell_lo");
  if (!(spec.ell_hi >= spec.ell_lo)) throw argument_error("ellipticity window is empty");
  require_positive(reg_width, "reg_width");
  if (!boundary_data) throw argument_error("boundary data function is empty");
  const int dim = static_cast<int>(domain.lo.size());
  if (dim < 1 || dim > 2) {
    throw argument_error("linear transmission solver supports 1 or 2 spatial dimensions");
  }
  const Lattice g = make_lattice(domain, steps, dim);

  GridField field(dim, domain.lo, g.h, g.nodes, domain.t0, g.dt, steps.time + 1);
  const auto a_reg = regularized_coefficient(
      {spec.a_plus, spec.a_minus, reg_width});

  const int rows = dim == 1 ? g.n0() - 2 : (g.n0() - 2) * (g.n1() - 2);
  const auto row_of = [&](int i, int j) { return (i - 1) + (g.n0() - 2) * (j - 1); };
  const auto is_interior = [&](int i, int j) {
    return i >= 1 && i + 1 < g.n0() && (dim == 1 || (j >= 1 && j + 1 < g.n1()));
  };

  std::vector<double> x(static_cast<std::size_t>(dim));
  const auto fill_x = [&](int i, int j) {
    x[0] = field.coord(0, i);
    if (dim == 2) x[1] = field.coord(1, j);
  };

  // Initial slab.
  for (int j = 0; j < g.n1(); ++j) {
    for (int i = 0; i < g.n0(); ++i) {
      fill_x(i, j);
      if (dim == 1) {
        field.at(i, 0) = boundary_data(x, domain.t0);
      } else {
        field.at(i, j, 0) = boundary_data(x, domain.t0);
      }
    }
  }

  LinearStepSolver solver;
  Triplets trips;
  Eigen::VectorXd rhs(rows);
  bool rhs_all_zero = true;
  bool monotone_stencil = true;
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim, dim);

  for (int k = 1; k <= steps.time; ++k) {
    const auto tick = std::chrono::steady_clock::now();
    const double t = field.time(k);
    trips.clear();
    rhs.setZero();

    for (int j = dim == 2 ? 1 : 0; j < (dim == 2 ? g.n1() - 1 : 1); ++j) {
      for (int i = 1; i + 1 < g.n0(); ++i) {
        fill_x(i, j);
        const double xn = x[static_cast<std::size_t>(dim - 1)];
        const double areg = a_reg(xn);
        const Eigen::MatrixXd A = spec.coeff_field ? spec.coeff_field(x, t) : identity;
        if (A.rows() != dim) {
          throw argument_error("coefficient field dimension mismatch");
        }
        check_ellipticity_sample(A, spec);
        const double ramp = regularized_ramp(xn, reg_width);
        const double f = ramp * (spec.rhs_plus ? spec.rhs_plus(x, t) : 0.0) +
                         (1.0 - ramp) * (spec.rhs_minus ? spec.rhs_minus(x, t) : 0.0);
        if (f != 0.0) rhs_all_zero = false;

        const int row = dim == 1 ? i - 1 : row_of(i, j);
        const double prev = dim == 1 ? field.value(i, k - 1) : field.value(i, j, k - 1);
        double diag = areg / g.dt;
        rhs[row] += f + areg / g.dt * prev;

        // (offset pair, weight) entries of -a_ij D_ij at this node.
        const auto couple = [&](int ii, int jj, double v) {
          if (v == 0.0) return;
          if (v > 1e-14 * diag) monotone_stencil = false;
          if (is_interior(ii, jj)) {
            trips.emplace_back(row, dim == 1 ? ii - 1 : row_of(ii, jj), v);
          } else {
            std::vector<double> bx{field.coord(0, ii)};
            if (dim == 2) bx.push_back(field.coord(1, jj));
            rhs[row] -= v * boundary_data(bx, t);
          }
        };

        diag += 2.0 * A(0, 0) / (g.h[0] * g.h[0]);
        if (dim == 2) diag += 2.0 * A(1, 1) / (g.h[1] * g.h[1]);
        trips.emplace_back(row, row, diag);

        couple(i - 1, j, -A(0, 0) / (g.h[0] * g.h[0]));
        couple(i + 1, j, -A(0, 0) / (g.h[0] * g.h[0]));
        if (dim == 2) {
          couple(i, j - 1, -A(1, 1) / (g.h[1] * g.h[1]));
          couple(i, j + 1, -A(1, 1) / (g.h[1] * g.h[1]));
          // Both mixed terms a_12 D_12 and a_21 D_21 via the four corners.
          const double c = A(0, 1) / (2.0 * g.h[0] * g.h[1]);
          couple(i + 1, j + 1, -c);
          couple(i - 1, j - 1, -c);
          couple(i + 1, j - 1, c);
          couple(i - 1, j + 1, c);
        }
      }
    }

    solver.refresh(rows, trips);
    const Eigen::VectorXd v = solver.solve_checked(rhs, k);

    for (int j = 0; j < g.n1(); ++j) {
      for (int i = 0; i < g.n0(); ++i) {
        double value;
        if (is_interior(i, j)) {
          value = v[dim == 1 ? i - 1 : row_of(i, j)];
        } else {
          fill_x(i, j);
          value = boundary_data(x, t);
        }
        if (dim == 1) {
          field.at(i, k) = value;
        } else {
          field.at(i, j, k) = value;
        }
      }
    }
    if (log) log->push_back({k, solver.last_residual, timer_seconds(tick)});
  }

  field.check_finite();

  if (rhs_all_zero && monotone_stencil) {
    // Source-free monotone scheme: extrema must sit on the parabolic boundary.
    double bmin = 1e300, bmax = -1e300;
    for (int k = 0; k <= steps.time; ++k) {
      for (int j = 0; j < g.n1(); ++j) {
        for (int i = 0; i < g.n0(); ++i) {
          if (k > 0 && is_interior(i, j)) continue;
          const double value = dim == 1 ? field.value(i, k) : field.value(i, j, k);
          bmin = std::min(bmin, value);
          bmax = std::max(bmax, value);
        }
      }
    }
    const double tol = 1e-12 * std::max({1.0, std::fabs(bmin), std::fabs(bmax)});
    for (double value : field.raw()) {
      if (value < bmin - tol || value > bmax + tol) {
        throw numeric_error("discrete maximum principle violated on a source-free run");
      }
    }
  }
  return field;
}

namespace {

std::string residual_history_text(const std::vector<double>& history) {
  std::ostringstream msg;
  msg << "coefficient iteration did not converge; residual history:";
  for (double r : history) msg << " " << r;
  return msg.str();
}

}  // namespace

GridField solve_nonlinear(double a_plus, double a_minus, const SpaceTimeBox& domain,
                          const SpaceFn& initial_and_boundary,
                          const SolveSteps& steps, double reg_width,
                          const NonlinearOptions& opts,
                          std::vector<StepLogEntry>* log) {
  require_positive(a_plus, "a_plus");
  require_positive(a_minus, "a_minus");
  require_positive(reg_width, "reg_width");
  if (!initial_and_boundary) throw argument_error("initial/boundary function is empty");
  if (opts.max_coefficient_iters < 1) {
    throw argument_error("need at least one coefficient sweep");
  }
  const bool radial = opts.geometry == Geometry::radial1d;
  const int dim = opts.geometry == Geometry::cartesian2d ? 2 : 1;
  if (radial) {
    if (opts.radial_n < 1) throw argument_error("radial dimension must be at least 1");
    if (domain.lo.size() != 1 || domain.lo[0] != 0.0) {
      throw argument_error("radial domain must start at r = 0");
    }
  }
  const Lattice g = make_lattice(domain, steps, dim);

  GridField field(dim, domain.lo, g.h, g.nodes, domain.t0, g.dt, steps.time + 1);
  const auto a_reg = regularized_coefficient({a_plus, a_minus, reg_width});

  // Unknown rows: interior nodes, plus the r = 0 node in radial geometry
  // where symmetry replaces the boundary condition.
  const auto is_unknown = [&](int i, int j) {
    if (dim == 2) return i >= 1 && i + 1 < g.n0() && j >= 1 && j + 1 < g.n1();
    return radial ? i + 1 < g.n0() : (i >= 1 && i + 1 < g.n0());
  };
  const auto row_of = [&](int i, int j) {
    if (dim == 2) return (i - 1) + (g.n0() - 2) * (j - 1);
    return radial ? i : i - 1;
  };
  const int rows = dim == 2 ? (g.n0() - 2) * (g.n1() - 2) : (radial ? g.n0() - 1 : g.n0() - 2);

  std::vector<double> x(static_cast<std::size_t>(dim));
  const auto fill_x = [&](int i, int j) {
    x[0] = field.coord(0, i);
    if (dim == 2) x[1] = field.coord(1, j);
  };

  for (int j = 0; j < g.n1(); ++j) {
    for (int i = 0; i < g.n0(); ++i) {
      fill_x(i, j);
      const double v0 = initial_and_boundary(x, domain.t0);
      if (dim == 1) {
        field.at(i, 0) = v0;
      } else {
        field.at(i, j, 0) = v0;
      }
    }
  }

  const double h2 = g.h[0] * g.h[0];
  Triplets trips;
  Eigen::VectorXd rhs(rows);
  Eigen::VectorXd iterate(rows);

  for (int k = 1; k <= steps.time; ++k) {
    const auto tick = std::chrono::steady_clock::now();
    const double t = field.time(k);

    // Coefficient frozen at the previous time level to start.
    std::vector<double> coef(static_cast<std::size_t>(rows));
    for (int j = 0; j < g.n1(); ++j) {
      for (int i = 0; i < g.n0(); ++i) {
        if (!is_unknown(i, j)) continue;
        const double prev = dim == 1 ? field.value(i, k - 1) : field.value(i, j, k - 1);
        coef[static_cast<std::size_t>(row_of(i, j))] = a_reg(prev);
      }
    }

    std::vector<double> history;
    double step_residual = 0.0;
    bool converged = false;
    bool have_iterate = false;

    for (int sweep = 0; sweep < opts.max_coefficient_iters && !converged; ++sweep) {
      trips.clear();
      rhs.setZero();
      for (int j = dim == 2 ? 1 : 0; j < (dim == 2 ? g.n1() - 1 : 1); ++j) {
        for (int i = 0; i < g.n0(); ++i) {
          if (!is_unknown(i, j)) continue;
          const int row = row_of(i, j);
          const double prev = dim == 1 ? field.value(i, k - 1) : field.value(i, j, k - 1);
          const double ac = coef[static_cast<std::size_t>(row)];
          double diag = ac / g.dt;
          rhs[row] += ac / g.dt * prev;

          const auto couple = [&](int ii, int jj, double v) {
            if (is_unknown(ii, jj)) {
              trips.emplace_back(row, row_of(ii, jj), v);
            } else {
              std::vector<double> bx{field.coord(0, ii)};
              if (dim == 2) bx.push_back(field.coord(1, jj));
              rhs[row] -= v * initial_and_boundary(bx, t);
            }
          };

          if (radial && i == 0) {
            // Symmetry at the origin: the Laplacian degenerates to n u_rr,
            // discretized with the even extension u(-h) = u(h).
            const double w = 2.0 * opts.radial_n / h2;
            diag += w;
            couple(1, j, -w);
          } else if (radial) {
            const double r = field.coord(0, i);
            const double drift = (opts.radial_n - 1) / (2.0 * r * g.h[0]);
            diag += 2.0 / h2;
            couple(i - 1, j, -(1.0 / h2 - drift));
            couple(i + 1, j, -(1.0 / h2 + drift));
          } else {
            diag += 2.0 / h2;
            couple(i - 1, j, -1.0 / h2);
            couple(i + 1, j, -1.0 / h2);
            if (dim == 2) {
              const double h2y = g.h[1] * g.h[1];
              diag += 2.0 / h2y;
              couple(i, j - 1, -1.0 / h2y);
              couple(i, j + 1, -1.0 / h2y);
            }
          }
          trips.emplace_back(row, row, diag);
        }
      }

      Eigen::SparseMatrix<double> A(rows, rows);
      A.setFromTriplets(trips.begin(), trips.end());
      A.makeCompressed();
      Eigen::VectorXd v;
      if (radial) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
        if (lu.info() != Eigen::Success) throw numeric_error("nonlinear step matrix is singular");
        v = lu.solve(rhs);
      } else {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        if (ldlt.info() != Eigen::Success) {
          throw numeric_error("nonlinear step matrix is not positive definite");
        }
        v = ldlt.solve(rhs);
      }
      step_residual = (A * v - rhs).lpNorm<Eigen::Infinity>();
      const double bound = 1e-10 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
      if (!(step_residual <= bound)) {
        std::ostringstream msg;
        msg << "nonlinear step " << k << " linear solve stalled at residual "
            << step_residual;
        throw numeric_error(msg.str());
      }

      if (have_iterate) {
        history.push_back((v - iterate).lpNorm<Eigen::Infinity>());
      }
      iterate = v;
      have_iterate = true;

      // Refresh the lagged coefficient; a fixed coefficient means the next
      // solve would reproduce this iterate exactly, so stop here.
      double coef_shift = 0.0;
      for (int j = 0; j < g.n1(); ++j) {
        for (int i = 0; i < g.n0(); ++i) {
          if (!is_unknown(i, j)) continue;
          const int row = row_of(i, j);
          const double fresh = a_reg(v[row]);
          coef_shift = std::max(coef_shift, std::fabs(fresh - coef[static_cast<std::size_t>(row)]));
          coef[static_cast<std::size_t>(row)] = fresh;
        }
      }
      if (coef_shift <= 1e-12 * std::max(a_plus, a_minus)) converged = true;
      if (!history.empty() &&
          history.back() <= opts.coefficient_tol * std::max(1.0, iterate.lpNorm<Eigen::Infinity>())) {
        converged = true;
      }
    }
    if (!converged) throw numeric_error(residual_history_text(history));

    for (int j = 0; j < g.n1(); ++j) {
      for (int i = 0; i < g.n0(); ++i) {
        double value;
        if (is_unknown(i, j)) {
          value = iterate[row_of(i, j)];
        } else {
          fill_x(i, j);
          value = initial_and_boundary(x, t);
        }
        if (dim == 1) {
          field.at(i, k) = value;
        } else {
          field.at(i, j, k) = value;
        }
      }
    }
    if (log) {
      log->push_back({k, history.empty() ? step_residual : history.back(),
                      timer_seconds(tick)});
    }
  }

  field.check_finite();
  return field;
}

}  // namespace fblab::pde
