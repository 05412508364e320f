#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fblab/errors.hpp"

namespace fblab {

// A point (x, t) in space-time.  Spatial dimension is x.size().
struct SpaceTime {
  std::vector<double> x;
  double t = 0.0;
};

// Parabolic distance ((x,t),(y,s)) -> (|x-y|^2 + |t-s|)^(1/2).
// Throws argument_error when the spatial dimensions differ.
double parabolic_distance(const SpaceTime& p, const SpaceTime& q);

// Backward parabolic cylinder Q_r(x0, t0) = B_r(x0) x (t0 - r^2, t0].
// Space is an open ball; time is left-open, right-closed.
struct ParabolicCylinder {
  std::vector<double> center_x;
  double center_t = 0.0;
  double radius = 1.0;

  bool contains(const std::vector<double>& x, double t) const;
  bool contains(const SpaceTime& p) const { return contains(p.x, p.t); }
};

// Scalar samples on a uniform space-time lattice with 1 to 3 spatial axes.
// Values are stored time-major; spatial axis 0 varies fastest.  The last
// spatial axis plays the role of the distinguished direction when a field
// represents a function near a flat interface.
class GridField {
 public:
  GridField() = default;
  GridField(int dim, std::vector<double> origin, std::vector<double> step,
            std::vector<int> nodes, double t_start, double dt, int time_nodes);

  int dim() const { return dim_; }
  int nodes(int axis) const { return nodes_[static_cast<std::size_t>(axis)]; }
  int time_nodes() const { return time_nodes_; }
  double origin(int axis) const { return origin_[static_cast<std::size_t>(axis)]; }
  double step(int axis) const { return step_[static_cast<std::size_t>(axis)]; }
  double t_start() const { return t_start_; }
  double dt() const { return dt_; }

  double coord(int axis, int i) const { return origin(axis) + i * step(axis); }
  double time(int k) const { return t_start_ + k * dt_; }
  std::size_t spatial_size() const { return spatial_size_; }
  std::size_t size() const { return values_.size(); }

  // Accessors for each supported dimension; the trailing index is time.
  double& at(int i, int k);
  double& at(int i, int j, int k);
  double& at(int i, int j, int l, int k);
  double value(int i, int k) const;
  double value(int i, int j, int k) const;
  double value(int i, int j, int l, int k) const;

  // Generic access: idx has dim() entries.
  double& node(const int* idx, int k);
  double node_value(const int* idx, int k) const;

  const std::vector<double>& raw() const { return values_; }
  std::vector<double>& raw() { return values_; }

  // Throws numeric_error if any stored value is NaN or infinite.
  void check_finite() const;

  // CSV with header x1,...,xn,t,value and 17 significant digits.  Row order
  // is deterministic: time outermost, then spatial axes from last to first.
  void write_csv(std::ostream& out) const;
  static GridField read_csv(std::istream& in);
  void write_csv_file(const std::string& path) const;
  static GridField read_csv_file(const std::string& path);

 private:
  std::size_t flat(const int* idx, int k) const;

  int dim_ = 0;
  std::vector<double> origin_, step_;
  std::vector<int> nodes_;
  double t_start_ = 0.0, dt_ = 0.0;
  int time_nodes_ = 0;
  std::size_t spatial_size_ = 0;
  std::vector<double> values_;
};

// A finite set of points in R^m, all of the same length.
struct PointSet {
  std::vector<std::vector<double>> points;
};

// Exact two-sided Hausdorff distance under the Euclidean metric.
// Brute force over all pairs; throws argument_error on an empty set or
// mismatched point lengths.
double hausdorff_distance(const PointSet& a, const PointSet& b);

// Result of fitting a Holder-type seminorm to sampled data.
struct HolderFit {
  double exponent = 0.0;      // largest grid exponent whose constant is below the cap
  double constant = 0.0;      // sup over pairs of |dv| / d^exponent
  double loglog_slope = 0.0;  // least-squares slope of log|dv| against log d
};

// Fit from raw (distance, |difference|) pairs.  Pairs with distance <= 0 are
// rejected.  The log-log slope drops pairs whose difference is below 1e-12.
HolderFit holder_fit_pairs(const std::vector<std::pair<double, double>>& pairs,
                           const std::vector<double>& exponent_grid,
                           double constant_cap = 1e3);

// Fit from space-time samples of a scalar function, using the parabolic
// distance between sample points.  Requires at least 8 pairwise-distinct
// samples.
HolderFit holder_seminorm_fit(const std::vector<std::pair<SpaceTime, double>>& samples,
                              const std::vector<double>& exponent_grid,
                              double constant_cap = 1e3);

// Collects the graph points (x_1, ..., x_n, t, value) of all grid nodes that
// lie inside the window.  Throws argument_error when no node does.
PointSet graph_to_pointset(const GridField& field, const ParabolicCylinder& window);

}  // namespace fblab
