#include "fblab/hodograph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fblab::hodograph {

namespace {

// Multi-index over the tangential axes (all but the last); a 1d field has
// the single empty tuple.
class TangentWalker {
 public:
  explicit TangentWalker(const GridField& field)
      : field_(field), idx_(static_cast<std::size_t>(std::max(0, field.dim() - 1)), 0) {}

  // Restrict every tangential axis to [margin, nodes - 1 - margin].
  TangentWalker(const GridField& field, int margin) : TangentWalker(field) {
    margin_ = margin;
    for (auto& i : idx_) i = margin;
  }

  const std::vector<int>& idx() const { return idx_; }

  bool valid() const {
    for (std::size_t a = 0; a < idx_.size(); ++a) {
      if (idx_[a] > field_.nodes(static_cast<int>(a)) - 1 - margin_) return false;
    }
    return !idx_.empty() || first_;
  }

  void advance() {
    if (idx_.empty()) {
      first_ = false;
      return;
    }
    for (std::size_t a = 0; a < idx_.size(); ++a) {
      if (++idx_[a] <= field_.nodes(static_cast<int>(a)) - 1 - margin_) return;
      idx_[a] = margin_;
    }
    // Wrapped around completely: mark exhaustion via the first axis.
    idx_[0] = field_.nodes(0);
  }

 private:
  const GridField& field_;
  std::vector<int> idx_;
  int margin_ = 0;
  bool first_ = true;
};

std::string column_label(const GridField& field, const std::vector<int>& col, double t) {
  std::ostringstream line;
  line << "(x' = (";
  for (std::size_t a = 0; a < col.size(); ++a) {
    line << (a ? ", " : "") << field.coord(static_cast<int>(a), col[a]);
  }
  line << "), t = " << t << ")";
  return line.str();
}

Eigen::MatrixXd closed_form_b(const std::vector<double>& p) {
  const int n = static_cast<int>(p.size());
  const double pn = p.back();
  const double q = 1.0 / (pn * pn);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    for (int j = 0; j + 1 < n; ++j) {
      b(i, j) = (i == j ? 1.0 : 0.0) + p[static_cast<std::size_t>(i)] *
                                           p[static_cast<std::size_t>(j)] * q;
    }
    b(i, n - 1) = -p[static_cast<std::size_t>(i)] * q;
    b(n - 1, i) = b(i, n - 1);
  }
  b(n - 1, n - 1) = q;
  return b;
}

HodographPatch transform_core(GridField source, double lambda) {
  if (!(lambda > 0.0) || !(lambda < 0.5)) {
    throw argument_error("monotonicity floor lambda must lie in (0, 1/2)");
  }
  const int d = source.dim();
  const int last = d - 1;
  const int nn = source.nodes(last);
  if (nn < 2) throw argument_error("transform needs at least two nodes along the last axis");
  const double hn = source.step(last);

  double lambda_bar = 0.0;
  double vmin = -std::numeric_limits<double>::infinity();
  double vmax = std::numeric_limits<double>::infinity();
  std::vector<std::string> offenders;
  std::size_t offender_total = 0;

  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (int k = 0; k < source.time_nodes(); ++k) {
    for (TangentWalker cols(source); cols.valid(); cols.advance()) {
      for (int a = 0; a < last; ++a) idx[static_cast<std::size_t>(a)] = cols.idx()[static_cast<std::size_t>(a)];
      bool bad = false;
      for (int j = 0; j + 1 < nn; ++j) {
        idx[static_cast<std::size_t>(last)] = j;
        const double lo_v = source.node_value(idx.data(), k);
        idx[static_cast<std::size_t>(last)] = j + 1;
        const double slope = (source.node_value(idx.data(), k) - lo_v) / hn;
        lambda_bar = std::max(lambda_bar, slope);
        if (slope < lambda) bad = true;
      }
      if (bad) {
        ++offender_total;
        if (offenders.size() < 8) {
          offenders.push_back(column_label(source, cols.idx(), source.time(k)));
        }
      }
      idx[static_cast<std::size_t>(last)] = 0;
      vmin = std::max(vmin, source.node_value(idx.data(), k));
      idx[static_cast<std::size_t>(last)] = nn - 1;
      vmax = std::min(vmax, source.node_value(idx.data(), k));
    }
  }
  if (offender_total > 0) {
    std::ostringstream msg;
    msg << "monotonicity floor " << lambda << " violated in " << offender_total
        << " column(s): ";
    for (std::size_t i = 0; i < offenders.size(); ++i) msg << (i ? "; " : "") << offenders[i];
    if (offender_total > offenders.size()) msg << "; ...";
    throw argument_error(msg.str());
  }
  if (!(vmax > vmin)) {
    throw argument_error("column value ranges share no interval to invert over");
  }

  // Uniform image axis; when 0 is interior a node is pinned exactly onto it
  // by shrinking the spacing as little as possible.
  const int N = nn;
  double dy = (vmax - vmin) / (N - 1);
  double y0 = vmin;
  int j0 = -1;
  if (vmin < 0.0 && 0.0 < vmax) {
    j0 = static_cast<int>(std::llround((0.0 - vmin) / dy));
    j0 = std::clamp(j0, 1, N - 2);
    dy = std::min((0.0 - vmin) / j0, (vmax - 0.0) / (N - 1 - j0));
    y0 = -(j0 * dy);
  }

  std::vector<double> origin(static_cast<std::size_t>(d));
  std::vector<double> step(static_cast<std::size_t>(d));
  std::vector<int> counts(static_cast<std::size_t>(d));
  for (int a = 0; a < last; ++a) {
    origin[static_cast<std::size_t>(a)] = source.origin(a);
    step[static_cast<std::size_t>(a)] = source.step(a);
    counts[static_cast<std::size_t>(a)] = source.nodes(a);
  }
  origin[static_cast<std::size_t>(last)] = y0;
  step[static_cast<std::size_t>(last)] = dy;
  counts[static_cast<std::size_t>(last)] = N;

  GridField h(d, origin, step, counts, source.t_start(), source.dt(), source.time_nodes());

  std::vector<double> column(static_cast<std::size_t>(nn));
  std::vector<int> hidx(static_cast<std::size_t>(d), 0);
  for (int k = 0; k < source.time_nodes(); ++k) {
    for (TangentWalker cols(source); cols.valid(); cols.advance()) {
      for (int a = 0; a < last; ++a) {
        idx[static_cast<std::size_t>(a)] = cols.idx()[static_cast<std::size_t>(a)];
        hidx[static_cast<std::size_t>(a)] = cols.idx()[static_cast<std::size_t>(a)];
      }
      for (int j = 0; j < nn; ++j) {
        idx[static_cast<std::size_t>(last)] = j;
        column[static_cast<std::size_t>(j)] = source.node_value(idx.data(), k);
      }
      const double x_lo = source.origin(last);
      for (int m = 0; m < N; ++m) {
        const double v = h.coord(last, m);
        auto it = std::upper_bound(column.begin(), column.end(), v);
        int b = static_cast<int>(it - column.begin()) - 1;
        b = std::clamp(b, 0, nn - 2);
        const double u0 = column[static_cast<std::size_t>(b)];
        const double u1 = column[static_cast<std::size_t>(b) + 1];
        hidx[static_cast<std::size_t>(last)] = m;
        h.node(hidx.data(), k) = x_lo + hn * (b + (v - u0) / (u1 - u0));
      }
    }
  }

  HodographPatch patch;
  patch.source = std::move(source);
  patch.h = std::move(h);
  patch.lambda = lambda;
  patch.lambda_bar = lambda_bar;
  patch.interface_index = j0;
  return patch;
}

}  // namespace

HodographPatch forward_transform(const GridField& field, double lambda) {
  return transform_core(field, lambda);
}

HodographPatch forward_transform(const GridField& field, const pde::SpaceTimeBox& window,
                                 double lambda) {
  const int d = field.dim();
  if (static_cast<int>(window.lo.size()) != d || static_cast<int>(window.hi.size()) != d) {
    throw argument_error("window does not match the field dimension");
  }
  std::vector<int> lo_i(static_cast<std::size_t>(d)), hi_i(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const double s = field.step(a);
    int lo = static_cast<int>(std::ceil((window.lo[static_cast<std::size_t>(a)] - field.origin(a)) / s - 1e-9));
    int hi = static_cast<int>(std::floor((window.hi[static_cast<std::size_t>(a)] - field.origin(a)) / s + 1e-9));
    lo = std::max(lo, 0);
    hi = std::min(hi, field.nodes(a) - 1);
    const int needed = (a == d - 1) ? 1 : 0;
    if (hi - lo < needed) {
      throw argument_error("window captures too few nodes on axis " + std::to_string(a));
    }
    lo_i[static_cast<std::size_t>(a)] = lo;
    hi_i[static_cast<std::size_t>(a)] = hi;
  }
  int k_lo = static_cast<int>(std::ceil((window.t0 - field.t_start()) / field.dt() - 1e-9));
  int k_hi = static_cast<int>(std::floor((window.t1 - field.t_start()) / field.dt() + 1e-9));
  k_lo = std::max(k_lo, 0);
  k_hi = std::min(k_hi, field.time_nodes() - 1);
  if (k_hi < k_lo) throw argument_error("window captures no time slice");

  std::vector<double> origin(static_cast<std::size_t>(d));
  std::vector<double> step(static_cast<std::size_t>(d));
  std::vector<int> counts(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    origin[static_cast<std::size_t>(a)] = field.coord(a, lo_i[static_cast<std::size_t>(a)]);
    step[static_cast<std::size_t>(a)] = field.step(a);
    counts[static_cast<std::size_t>(a)] = hi_i[static_cast<std::size_t>(a)] - lo_i[static_cast<std::size_t>(a)] + 1;
  }
  GridField sub(d, origin, step, counts, field.time(k_lo), field.dt(), k_hi - k_lo + 1);

  std::vector<int> sidx(static_cast<std::size_t>(d), 0);
  std::vector<int> fidx(static_cast<std::size_t>(d), 0);
  for (int k = 0; k < sub.time_nodes(); ++k) {
    std::fill(sidx.begin(), sidx.end(), 0);
    while (true) {
      for (int a = 0; a < d; ++a) {
        fidx[static_cast<std::size_t>(a)] = sidx[static_cast<std::size_t>(a)] + lo_i[static_cast<std::size_t>(a)];
      }
      sub.node(sidx.data(), k) = field.node_value(fidx.data(), k + k_lo);
      int a = 0;
      for (; a < d; ++a) {
        if (++sidx[static_cast<std::size_t>(a)] < sub.nodes(a)) break;
        sidx[static_cast<std::size_t>(a)] = 0;
      }
      if (a == d) break;
    }
  }
  return transform_core(std::move(sub), lambda);
}

DerivativeResiduals derivative_identity_check(const HodographPatch& patch) {
  const GridField& h = patch.h;
  const GridField& u = patch.source;
  const int d = h.dim();
  const int last = d - 1;
  for (int a = 0; a < d; ++a) {
    if (h.nodes(a) < 3 || u.nodes(a) < 3) {
      throw argument_error("identity check needs at least three nodes per axis");
    }
  }
  if (h.time_nodes() < 3) {
    throw argument_error("identity check needs at least three time slices");
  }

  const double dt = h.dt();
  const double dy = h.step(last);
  const double hs = u.step(last);

  DerivativeResiduals out;
  std::vector<int> hi(static_cast<std::size_t>(d), 0);
  std::vector<int> ui(static_cast<std::size_t>(d), 0);
  for (int k = 1; k + 1 < h.time_nodes(); ++k) {
    for (TangentWalker cols(h, 1); cols.valid(); cols.advance()) {
      for (int a = 0; a < last; ++a) {
        hi[static_cast<std::size_t>(a)] = cols.idx()[static_cast<std::size_t>(a)];
        ui[static_cast<std::size_t>(a)] = cols.idx()[static_cast<std::size_t>(a)];
      }
      for (int j = 1; j + 1 < h.nodes(last); ++j) {
        const auto h_at = [&](int jj, int kk, int shift_axis = -1, int shift = 0) {
          std::vector<int>& v = hi;
          if (shift_axis >= 0) v[static_cast<std::size_t>(shift_axis)] += shift;
          v[static_cast<std::size_t>(last)] = jj;
          const double val = h.node_value(v.data(), kk);
          if (shift_axis >= 0) v[static_cast<std::size_t>(shift_axis)] -= shift;
          return val;
        };
        const double ht = (h_at(j, k + 1) - h_at(j, k - 1)) / (2.0 * dt);
        const double hn = (h_at(j + 1, k) - h_at(j - 1, k)) / (2.0 * dy);

        // Align the source stencil with the preimage of this node.
        const double xn = h_at(j, k);
        int jn = static_cast<int>(std::llround((xn - u.origin(last)) / hs));
        jn = std::clamp(jn, 1, u.nodes(last) - 2);
        const auto u_at = [&](int jj, int kk, int shift_axis = -1, int shift = 0) {
          std::vector<int>& v = ui;
          if (shift_axis >= 0) v[static_cast<std::size_t>(shift_axis)] += shift;
          v[static_cast<std::size_t>(last)] = jj;
          const double val = u.node_value(v.data(), kk);
          if (shift_axis >= 0) v[static_cast<std::size_t>(shift_axis)] -= shift;
          return val;
        };
        const double ut = (u_at(jn, k + 1) - u_at(jn, k - 1)) / (2.0 * dt);
        const double un = (u_at(jn + 1, k) - u_at(jn - 1, k)) / (2.0 * hs);

        out.time = std::max(out.time, std::fabs(ut + ht / hn));
        out.gradient = std::max(out.gradient, std::fabs(un - 1.0 / hn));
        for (int a = 0; a < last; ++a) {
          const double ha =
              (h_at(j, k, a, +1) - h_at(j, k, a, -1)) / (2.0 * h.step(a));
          const double ua =
              (u_at(jn, k, a, +1) - u_at(jn, k, a, -1)) / (2.0 * u.step(a));
          out.gradient = std::max(out.gradient, std::fabs(ua + ha / hn));
        }
      }
    }
  }
  return out;
}

HodographCoefficients coefficient_matrix(const std::vector<double>& p) {
  if (p.empty()) throw argument_error("direction vector is empty");
  if (!(std::fabs(p.back()) > 0.0)) {
    throw argument_error("p_n = 0 makes the hodograph direction singular");
  }
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd b = closed_form_b(p);

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j + 1 < n; ++j) a(n - 1, j) = -p[static_cast<std::size_t>(j)] / p.back();
  a(n - 1, n - 1) = 1.0 / p.back();
  const Eigen::MatrixXd product = a.transpose() * a;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if ((b - product).cwiseAbs().maxCoeff() > 1e-14 * scale) {
    throw numeric_error("closed-form coefficient matrix disagrees with A^T A");
  }
  return HodographCoefficients{p, std::move(b)};
}

TransmissionReport transmission_residual(const HodographPatch& patch, double a_plus,
                                         double a_minus) {
  if (!(a_plus > 0.0) || !(a_minus > 0.0)) {
    throw argument_error("phase coefficients must be positive");
  }
  const GridField& h = patch.h;
  const int d = h.dim();
  const int last = d - 1;
  const int N = h.nodes(last);
  const int j0 = patch.interface_index;
  if (j0 < 2 || j0 > N - 3) {
    throw argument_error("interface row is not at least two cells inside the patch");
  }
  if (h.time_nodes() < 3) {
    throw argument_error("residual check needs at least three time slices");
  }
  for (int a = 0; a < last; ++a) {
    if (h.nodes(a) < 3) throw argument_error("residual check needs three nodes per axis");
  }

  const double dt = h.dt();
  const double dy = h.step(last);

  TransmissionReport rep;
  std::vector<int> hi(static_cast<std::size_t>(d), 0);
  std::vector<double> p(static_cast<std::size_t>(d), 0.0);
  Eigen::MatrixXd second(d, d);

  const auto h_at = [&](int jj, int kk, int sa = -1, int s1 = 0, int sb = -1, int s2 = 0) {
    if (sa >= 0) hi[static_cast<std::size_t>(sa)] += s1;
    if (sb >= 0) hi[static_cast<std::size_t>(sb)] += s2;
    hi[static_cast<std::size_t>(last)] = jj;
    const double val = h.node_value(hi.data(), kk);
    if (sa >= 0) hi[static_cast<std::size_t>(sa)] -= s1;
    if (sb >= 0) hi[static_cast<std::size_t>(sb)] -= s2;
    return val;
  };

  for (int k = 1; k + 1 < h.time_nodes(); ++k) {
    for (TangentWalker cols(h, 1); cols.valid(); cols.advance()) {
      for (int a = 0; a < last; ++a) hi[static_cast<std::size_t>(a)] = cols.idx()[static_cast<std::size_t>(a)];
      for (int j = 1; j + 1 < N; ++j) {
        if (j == j0) continue;

        const double ht = (h_at(j, k + 1) - h_at(j, k - 1)) / (2.0 * dt);
        for (int a = 0; a < last; ++a) {
          p[static_cast<std::size_t>(a)] =
              (h_at(j, k, a, +1) - h_at(j, k, a, -1)) / (2.0 * h.step(a));
        }
        p[static_cast<std::size_t>(last)] = (h_at(j + 1, k) - h_at(j - 1, k)) / (2.0 * dy);

        const double center = h_at(j, k);
        for (int a = 0; a < d; ++a) {
          const double sa = h.step(a);
          if (a == last) {
            second(a, a) = (h_at(j + 1, k) - 2.0 * center + h_at(j - 1, k)) / (sa * sa);
          } else {
            second(a, a) =
                (h_at(j, k, a, +1) - 2.0 * center + h_at(j, k, a, -1)) / (sa * sa);
          }
          for (int b = a + 1; b < d; ++b) {
            double cross;
            if (b == last) {
              cross = (h_at(j + 1, k, a, +1) - h_at(j - 1, k, a, +1) -
                       h_at(j + 1, k, a, -1) + h_at(j - 1, k, a, -1)) /
                      (4.0 * sa * h.step(b));
            } else {
              cross = (h_at(j, k, a, +1, b, +1) - h_at(j, k, a, +1, b, -1) -
                       h_at(j, k, a, -1, b, +1) + h_at(j, k, a, -1, b, -1)) /
                      (4.0 * sa * h.step(b));
            }
            second(a, b) = cross;
            second(b, a) = cross;
          }
        }

        const Eigen::MatrixXd b = closed_form_b(p);
        double elliptic = 0.0;
        for (int a = 0; a < d; ++a) {
          for (int c = 0; c < d; ++c) elliptic += b(a, c) * second(a, c);
        }
        const double phase = (j > j0) ? a_plus : a_minus;
        const double res = std::fabs(phase * ht - elliptic);
        if (j > j0) {
          rep.residual_plus = std::max(rep.residual_plus, res);
        } else {
          rep.residual_minus = std::max(rep.residual_minus, res);
        }
      }
    }
  }

  // One-sided first derivatives across the interface row.
  for (int k = 0; k < h.time_nodes(); ++k) {
    for (TangentWalker cols(h); cols.valid(); cols.advance()) {
      for (int a = 0; a < last; ++a) hi[static_cast<std::size_t>(a)] = cols.idx()[static_cast<std::size_t>(a)];
      const double up = (-3.0 * h_at(j0, k) + 4.0 * h_at(j0 + 1, k) - h_at(j0 + 2, k)) /
                        (2.0 * dy);
      const double dn = (3.0 * h_at(j0, k) - 4.0 * h_at(j0 - 1, k) + h_at(j0 - 2, k)) /
                        (2.0 * dy);
      rep.interface_jump = std::max(rep.interface_jump, std::fabs(up - dn));
    }
  }
  return rep;
}

}  // namespace fblab::hodograph
