#include "fblab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "fblab/parallel.hpp"

namespace fblab {

double parabolic_distance(const SpaceTime& p, const SpaceTime& q) {
  if (p.x.size() != q.x.size()) {
    throw argument_error("parabolic_distance: spatial dimensions differ (" +
                         std::to_string(p.x.size()) + " vs " + std::to_string(q.x.size()) + ")");
  }
  double space2 = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double d = p.x[i] - q.x[i];
    space2 += d * d;
  }
  return std::sqrt(space2 + std::abs(p.t - q.t));
}

bool ParabolicCylinder::contains(const std::vector<double>& x, double t) const {
  if (x.size() != center_x.size()) {
    throw argument_error("ParabolicCylinder::contains: point dimension mismatch");
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - center_x[i];
    d2 += d * d;
  }
  if (d2 >= radius * radius) return false;
  return t > center_t - radius * radius && t <= center_t;
}

GridField::GridField(int dim, std::vector<double> origin, std::vector<double> step,
                     std::vector<int> nodes, double t_start, double dt, int time_nodes)
    : dim_(dim),
      origin_(std::move(origin)),
      step_(std::move(step)),
      nodes_(std::move(nodes)),
      t_start_(t_start),
      dt_(dt),
      time_nodes_(time_nodes) {
  if (dim_ < 1 || dim_ > 3) {
    throw argument_error("GridField: spatial dimension must be 1, 2 or 3, got " +
                         std::to_string(dim_));
  }
  if (origin_.size() != static_cast<std::size_t>(dim_) ||
      step_.size() != static_cast<std::size_t>(dim_) ||
      nodes_.size() != static_cast<std::size_t>(dim_)) {
    throw argument_error("GridField: origin/step/nodes must all have dim entries");
  }
  spatial_size_ = 1;
  for (int a = 0; a < dim_; ++a) {
    if (nodes_[static_cast<std::size_t>(a)] < 1) throw argument_error("GridField: need at least one node per axis");
    if (!(step_[static_cast<std::size_t>(a)] > 0.0)) throw argument_error("GridField: spatial step must be positive");
    spatial_size_ *= static_cast<std::size_t>(nodes_[static_cast<std::size_t>(a)]);
  }
  if (time_nodes_ < 1) throw argument_error("GridField: need at least one time node");
  if (time_nodes_ > 1 && !(dt_ > 0.0)) throw argument_error("GridField: time step must be positive");
  values_.assign(spatial_size_ * static_cast<std::size_t>(time_nodes_), 0.0);
}

std::size_t GridField::flat(const int* idx, int k) const {
  std::size_t s = 0;
  for (int a = dim_ - 1; a >= 0; --a) {
    s = s * static_cast<std::size_t>(nodes_[static_cast<std::size_t>(a)]) +
        static_cast<std::size_t>(idx[a]);
  }
  return static_cast<std::size_t>(k) * spatial_size_ + s;
}

double& GridField::at(int i, int k) {
  const int idx[1] = {i};
  return values_[flat(idx, k)];
}
double& GridField::at(int i, int j, int k) {
  const int idx[2] = {i, j};
  return values_[flat(idx, k)];
}
double& GridField::at(int i, int j, int l, int k) {
  const int idx[3] = {i, j, l};
  return values_[flat(idx, k)];
}
double GridField::value(int i, int k) const {
  const int idx[1] = {i};
  return values_[flat(idx, k)];
}
double GridField::value(int i, int j, int k) const {
  const int idx[2] = {i, j};
  return values_[flat(idx, k)];
}
double GridField::value(int i, int j, int l, int k) const {
  const int idx[3] = {i, j, l};
  return values_[flat(idx, k)];
}
double& GridField::node(const int* idx, int k) { return values_[flat(idx, k)]; }
double GridField::node_value(const int* idx, int k) const { return values_[flat(idx, k)]; }

void GridField::check_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw numeric_error("GridField: non-finite value at flat index " + std::to_string(i));
    }
  }
}

namespace {

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

void GridField::write_csv(std::ostream& out) const {
  std::string line;
  for (int a = 1; a <= dim_; ++a) line += "x" + std::to_string(a) + ",";
  line += "t,value\n";
  out << line;
  int idx[3] = {0, 0, 0};
  for (int k = 0; k < time_nodes_; ++k) {
    // Spatial axes from last to first, matching the flat storage order.
    std::fill(idx, idx + 3, 0);
    for (std::size_t s = 0; s < spatial_size_; ++s) {
      line.clear();
      for (int a = 0; a < dim_; ++a) {
        append_g17(line, coord(a, idx[a]));
        line += ',';
      }
      append_g17(line, time(k));
      line += ',';
      append_g17(line, values_[static_cast<std::size_t>(k) * spatial_size_ + s]);
      line += '\n';
      out << line;
      for (int a = 0; a < dim_; ++a) {
        if (++idx[a] < nodes_[static_cast<std::size_t>(a)]) break;
        idx[a] = 0;
      }
    }
  }
}

void GridField::write_csv_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw argument_error("GridField: cannot open " + path + " for writing");
  write_csv(out);
}

namespace {

// Rebuilds a sorted axis from the coordinates seen in a CSV file and checks
// that they form a uniform grid.
struct AxisInfo {
  std::vector<double> coords;
  double origin = 0.0, step = 1.0;

  int index_of(double v) const {
    const auto it = std::lower_bound(coords.begin(), coords.end(), v - tolerance());
    if (it == coords.end() || std::abs(*it - v) > tolerance()) {
      throw argument_error("GridField: CSV coordinate does not lie on the reconstructed grid");
    }
    return static_cast<int>(it - coords.begin());
  }

  double tolerance() const {
    const double scale = std::max(std::abs(coords.front()), std::abs(coords.back()));
    return 1e-9 * std::max(1.0, scale);
  }

  void finalize(const char* what) {
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end(),
                             [this](double a, double b) { return std::abs(a - b) <= tolerance(); }),
                 coords.end());
    origin = coords.front();
    step = coords.size() > 1 ? (coords.back() - coords.front()) / double(coords.size() - 1) : 1.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (std::abs(coords[i] - (origin + double(i) * step)) > tolerance()) {
        throw argument_error(std::string("GridField: non-uniform ") + what + " grid in CSV");
      }
    }
  }
};

}  // namespace

GridField GridField::read_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw argument_error("GridField: empty CSV");
  int dim = 0;
  {
    std::stringstream hs(header);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hs, col, ',')) cols.push_back(col);
    if (cols.size() < 3 || cols[cols.size() - 2] != "t" || cols.back() != "value") {
      throw argument_error("GridField: CSV header must be x1,...,xn,t,value");
    }
    dim = static_cast<int>(cols.size()) - 2;
    if (dim < 1 || dim > 3) throw argument_error("GridField: CSV must have 1 to 3 spatial columns");
  }

  struct Row {
    std::array<double, 3> x;
    double t, v;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    Row r{{0, 0, 0}, 0, 0};
    for (int a = 0; a < dim; ++a) {
      if (!std::getline(ls, cell, ',')) throw argument_error("GridField: short CSV row");
      r.x[static_cast<std::size_t>(a)] = std::stod(cell);
    }
    if (!std::getline(ls, cell, ',')) throw argument_error("GridField: short CSV row");
    r.t = std::stod(cell);
    if (!std::getline(ls, cell, ',')) throw argument_error("GridField: short CSV row");
    r.v = std::stod(cell);
    rows.push_back(r);
  }
  if (rows.empty()) throw argument_error("GridField: CSV has no data rows");

  std::array<AxisInfo, 3> axes;
  AxisInfo taxis;
  for (const Row& r : rows) {
    for (int a = 0; a < dim; ++a) axes[static_cast<std::size_t>(a)].coords.push_back(r.x[static_cast<std::size_t>(a)]);
    taxis.coords.push_back(r.t);
  }
  for (int a = 0; a < dim; ++a) axes[static_cast<std::size_t>(a)].finalize("spatial");
  taxis.finalize("time");

  std::vector<double> origin(static_cast<std::size_t>(dim)), step(static_cast<std::size_t>(dim));
  std::vector<int> nodes(static_cast<std::size_t>(dim));
  std::size_t expect = taxis.coords.size();
  for (int a = 0; a < dim; ++a) {
    origin[static_cast<std::size_t>(a)] = axes[static_cast<std::size_t>(a)].origin;
    step[static_cast<std::size_t>(a)] = axes[static_cast<std::size_t>(a)].step;
    nodes[static_cast<std::size_t>(a)] = static_cast<int>(axes[static_cast<std::size_t>(a)].coords.size());
    expect *= axes[static_cast<std::size_t>(a)].coords.size();
  }
  if (rows.size() != expect) {
    throw argument_error("GridField: CSV rows do not form a full grid (" +
                         std::to_string(rows.size()) + " rows, expected " + std::to_string(expect) + ")");
  }

  GridField f(dim, origin, step, nodes,
              taxis.origin, taxis.coords.size() > 1 ? taxis.step : 1.0,
              static_cast<int>(taxis.coords.size()));
  for (const Row& r : rows) {
    int idx[3] = {0, 0, 0};
    for (int a = 0; a < dim; ++a) idx[a] = axes[static_cast<std::size_t>(a)].index_of(r.x[static_cast<std::size_t>(a)]);
    f.node(idx, taxis.index_of(r.t)) = r.v;
  }
  return f;
}

GridField GridField::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw argument_error("GridField: cannot open " + path);
  return read_csv(in);
}

double hausdorff_distance(const PointSet& a, const PointSet& b) {
  if (a.points.empty() || b.points.empty()) {
    throw argument_error("hausdorff_distance: point sets must be non-empty");
  }
  const std::size_t m = a.points.front().size();
  for (const auto& p : a.points)
    if (p.size() != m) throw argument_error("hausdorff_distance: inconsistent point lengths");
  for (const auto& p : b.points)
    if (p.size() != m) throw argument_error("hausdorff_distance: inconsistent point lengths");

  auto directed = [m](const PointSet& from, const PointSet& to) {
    std::vector<double> nearest(from.points.size());
    parallel_for(from.points.size(), [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      const auto& p = from.points[i];
      for (const auto& q : to.points) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
          const double d = p[c] - q[c];
          d2 += d * d;
        }
        best = std::min(best, d2);
      }
      nearest[i] = best;
    });
    double worst = 0.0;
    for (double d2 : nearest) worst = std::max(worst, d2);
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

HolderFit holder_fit_pairs(const std::vector<std::pair<double, double>>& pairs,
                           const std::vector<double>& exponent_grid,
                           double constant_cap) {
  if (pairs.empty()) throw argument_error("holder_fit_pairs: no pairs");
  if (exponent_grid.empty()) throw argument_error("holder_fit_pairs: empty exponent grid");
  for (const auto& [d, dv] : pairs) {
    if (!(d > 0.0)) throw argument_error("holder_fit_pairs: distances must be positive");
    if (dv < 0.0) throw argument_error("holder_fit_pairs: differences must be non-negative");
  }

  // Sup-constant for each candidate exponent; keep the largest exponent that
  // stays below the cap.
  bool found = false;
  double best_e = 0.0, best_c = 0.0;
  double smallest_c = std::numeric_limits<double>::infinity();
  double e_of_smallest = exponent_grid.front();
  for (double e : exponent_grid) {
    double c = 0.0;
    for (const auto& [d, dv] : pairs) c = std::max(c, dv / std::pow(d, e));
    if (c < smallest_c) {
      smallest_c = c;
      e_of_smallest = e;
    }
    if (c <= constant_cap && (!found || e > best_e)) {
      found = true;
      best_e = e;
      best_c = c;
    }
  }
  if (!found) {
    throw numeric_error("holder_fit_pairs: no exponent in the grid keeps the constant below " +
                        std::to_string(constant_cap) + " (best was " + std::to_string(smallest_c) +
                        " at exponent " + std::to_string(e_of_smallest) + ")");
  }

  // Log-log slope as a diagnostic, ignoring differences at rounding level.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (const auto& [d, dv] : pairs) {
    if (dv < 1e-12) continue;
    const double lx = std::log(d), ly = std::log(dv);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  double slope = 0.0;
  if (cnt >= 2) {
    const double denom = double(cnt) * sxx - sx * sx;
    if (std::abs(denom) > 1e-30) slope = (double(cnt) * sxy - sx * sy) / denom;
  }
  return HolderFit{best_e, best_c, slope};
}

HolderFit holder_seminorm_fit(const std::vector<std::pair<SpaceTime, double>>& samples,
                              const std::vector<double>& exponent_grid,
                              double constant_cap) {
  if (samples.size() < 8) {
    throw argument_error("holder_seminorm_fit: need at least 8 samples, got " +
                         std::to_string(samples.size()));
  }
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(samples.size() * (samples.size() - 1) / 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = parabolic_distance(samples[i].first, samples[j].first);
      if (d == 0.0) throw argument_error("holder_seminorm_fit: samples must be pairwise distinct");
      pairs.emplace_back(d, std::abs(samples[i].second - samples[j].second));
    }
  }
  return holder_fit_pairs(pairs, exponent_grid, constant_cap);
}

PointSet graph_to_pointset(const GridField& field, const ParabolicCylinder& window) {
  if (static_cast<int>(window.center_x.size()) != field.dim()) {
    throw argument_error("graph_to_pointset: window dimension does not match the field");
  }
  PointSet out;
  std::vector<double> x(static_cast<std::size_t>(field.dim()));
  int idx[3] = {0, 0, 0};
  for (int k = 0; k < field.time_nodes(); ++k) {
    const double t = field.time(k);
    std::fill(idx, idx + 3, 0);
    for (std::size_t s = 0; s < field.spatial_size(); ++s) {
      for (int a = 0; a < field.dim(); ++a) x[static_cast<std::size_t>(a)] = field.coord(a, idx[a]);
      if (window.contains(x, t)) {
        std::vector<double> pt = x;
        pt.push_back(t);
        pt.push_back(field.node_value(idx, k));
        out.points.push_back(std::move(pt));
      }
      for (int a = 0; a < field.dim(); ++a) {
        if (++idx[a] < field.nodes(a)) break;
        idx[a] = 0;
      }
    }
  }
  if (out.points.empty()) {
    throw argument_error("graph_to_pointset: window contains no grid nodes");
  }
  return out;
}

}  // namespace fblab
