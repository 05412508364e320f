#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fblab/geometry.hpp"

namespace fblab::fbdiag {

// One zero-set sample: at tangential position x' and time t the field
// vanishes at last-axis coordinate g.  For 1d fields x' is empty.
struct FreeBoundarySample {
  std::vector<double> xprime;
  double t = 0.0;
  double g = 0.0;
};

// The zero set of a field written as a graph over the last spatial axis.
// fitted_normals is filled on demand by fit_graph_normals and pairs a
// sample index with a unit normal of the full spatial dimension.
struct FreeBoundaryGraph {
  std::vector<FreeBoundarySample> samples;
  std::vector<std::pair<std::size_t, std::vector<double>>> fitted_normals;
};

// Scans every grid column along the last axis inside the window.  A column
// contributes one sample when the values cross zero once strictly (the zero
// is placed by linear interpolation, exact for fields linear in the last
// coordinate) or hit zero at exactly one node.  Columns with no zero are
// omitted.  Two or more zero events in one column mean the zero set is not
// a graph; that throws an argument_error listing the offending columns.
FreeBoundaryGraph extract_free_boundary(const GridField& field,
                                        const ParabolicCylinder& window);

// max over grid nodes (x, t) in Q of |u(x, t) - nu . (x - Q.center_x)|.
// Throws when the window captures no node or nu has the wrong length.
double flatness(const GridField& field, const ParabolicCylinder& Q,
                const std::vector<double>& nu);

struct FlatnessReport {
  std::vector<double> radii;                 // the radii actually probed
  std::vector<double> deviations;            // best flatness at each radius
  std::vector<std::vector<double>> normals;  // minimizing direction at each radius
  // least-squares slope of log(deviation) against log(radius); +infinity
  // when every deviation is numerically zero, NaN when fewer than two
  // radii survive.
  double fitted_exponent = 0.0;
  std::string warning;  // nonempty when radii were dropped as too fine
};

// For each radius (strictly decreasing, each at least four grid cells wide,
// finer ones dropped with a warning) minimizes flatness over the direction
// by coordinate descent seeded from the previous radius' minimizer (e_n at
// the first), then fits the decay exponent of the deviations.
FlatnessReport improvement_of_flatness_probe(const GridField& field,
                                             const SpaceTime& center,
                                             const std::vector<double>& radii);

// Oscillations of u - x_n over the nested cylinders of radii r/3^i,
// i = 0..iterations, all sharing the window's center.  Checks that the top
// scale is delta-flat (max(|min|, |max|) <= delta) before descending.
std::vector<double> harnack_decay_probe(const GridField& field,
                                        const ParabolicCylinder& window,
                                        int iterations, double delta);

// Fits a unit normal (-grad' g, 1)/|.| at every sample whose tangential
// neighbors at the next lattice position are all present, using centered
// differences of g.  Samples from 1d fields all get e_n.  Returns the
// number of normals fitted.
std::size_t fit_graph_normals(FreeBoundaryGraph& graph);

// Holder fit of normal increments |nu_i - nu_j| against the parabolic
// distance of the zero-set points carrying them, over the exponent grid
// 0.05, 0.10, ..., 1.00.  Needs at least eight fitted normals.  Large
// graphs are strided down to roughly two thousand normals to keep the
// pair count bounded.
HolderFit normal_holder_probe(const FreeBoundaryGraph& graph);

}  // namespace fblab::fbdiag
