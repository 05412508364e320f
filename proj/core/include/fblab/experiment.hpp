#pragma once

#include <map>
#include <string>
#include <vector>

#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"

namespace fblab::experiment {

// The named recipes.  Each one drives the owning module(s), writes CSV
// artifacts (plus a gnuplot script where the output is plot-bearing), and
// evaluates a fixed set of pass/fail assertions.
enum class ExperimentKind {
  figure2,
  counterexample_sweep,
  linear_quadratic,
  selfsim_evolution,
  flatness_decay,
  harnack_decay,
  barrier_certificate,
  hodograph_roundtrip,
};

const char* kind_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::figure2;
  // Validated recipe parameters with defaults filled in, as written in the
  // config (numbers stay strings so a run record snapshots exact inputs).
  std::map<std::string, std::string> parameters;
  std::string output_dir = "fblab_out";
};

// Parses a line-oriented `key = value` config.  Blank lines and lines
// starting with '#' are skipped.  Every problem found (missing experiment
// key, unknown experiment, syntax errors, duplicate or unknown keys,
// unparsable numbers, out-of-range values) is collected; when anything is
// wrong the whole list is thrown as one config_error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

struct AssertionOutcome {
  std::string name;
  bool passed = false;
  std::string detail;  // the measured numbers behind the verdict
};

struct RunRecord {
  std::string experiment;
  std::map<std::string, std::string> parameters;
  std::vector<std::string> artifacts;  // paths as written, relative to output_dir
  std::vector<AssertionOutcome> assertions;
  double wall_seconds = 0.0;

  bool passed() const;
  std::string to_json_line() const;
};

// Runs the recipe and appends its record to <output_dir>/run_record.jsonl.
// The append is atomic: the updated file is staged next to the target and
// renamed over it.  Module failures propagate as their original error type
// with the failing stage named.  CSV artifacts are byte-identical across
// runs of the same config.
RunRecord run_experiment(const ExperimentConfig& config);

// Canonical solved two-phase fixtures used by the decay recipes and the
// acceptance suite: boundary and initial data x_n + delta * p(x, t) with a
// smooth |p| <= 1, diffusivities 1 and 1/2, and ramp width tied to 2h.  The
// discrete maximum principle keeps the solution delta-flat.
GridField perturbed_flat_solve_1d(double delta, int cells, int steps);
GridField perturbed_flat_solve_2d(double delta, int cells, int steps);

}  // namespace fblab::experiment
