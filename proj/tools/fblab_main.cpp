#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "fblab/barrier.hpp"
#include "fblab/errors.hpp"
#include "fblab/experiment.hpp"
#include "fblab/fbdiag.hpp"
#include "fblab/geometry.hpp"
#include "fblab/hodograph.hpp"
#include "fblab/pde.hpp"
#include "fblab/selfsim.hpp"
#include "fblab/specfun.hpp"

namespace {

using namespace fblab;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> split_reals(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      while (used < part.size() && std::isspace(static_cast<unsigned char>(part[used])))
        ++used;
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw argument_error(what + ": cannot parse '" + part + "' as a number");
    }
  }
  if (out.empty()) throw argument_error(what + " must list at least one number");
  return out;
}

// The --center option bundles the spatial coordinates with the time:
// "x1,...,xn,t" against a field of spatial dimension dim.
SpaceTime parse_center(const std::string& text, int dim) {
  auto vals = split_reals(text, "--center");
  if (static_cast<int>(vals.size()) != dim + 1)
    throw argument_error("--center needs " + std::to_string(dim) +
                         " spatial coordinates plus a time, got " +
                         std::to_string(vals.size()) + " entries");
  SpaceTime p;
  p.t = vals.back();
  vals.pop_back();
  p.x = std::move(vals);
  return p;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw argument_error("cannot open output file '" + path + "'");
  return out;
}

// Writes to the named file, or to stdout when the name is empty.
void emit(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body;
    return;
  }
  auto out = open_out(path);
  out << body;
  if (!out.flush()) throw numeric_error("short write to '" + path + "'");
}

int run_specfun_eval(const std::string& fn, double a, double b, double z) {
  const double v =
      fn == "M" ? specfun::kummer_m(a, b, z) : specfun::tricomi_u(a, b, z);
  std::cout << num(v) << "\n";
  return 0;
}

int run_specfun_zero(const std::string& fn, double alpha, int n, double eps) {
  const double v = fn == "M" ? specfun::scaled_zero_m(alpha, n)
                             : specfun::scaled_zero_u(alpha, n, eps);
  std::cout << num(v) << "\n";
  return 0;
}

int run_selfsim_match(int n, double eps, double tol) {
  const auto match = selfsim::solve_alpha(n, eps, tol);
  std::cout << "alpha = " << num(match.alpha) << "\n"
            << "s_eps = " << num(match.s_eps) << "\n"
            << "residual = " << num(match.residual) << "\n";
  return 0;
}

int run_selfsim_profile(int n, double eps, double smax, double ds,
                        const std::string& out_path) {
  if (!(smax > 0.0) || !(ds > 0.0) || ds > smax)
    throw argument_error("profile sampling needs 0 < ds <= smax");
  const auto profile = selfsim::build_profile(selfsim::solve_alpha(n, eps));
  std::string body = "s,f,fprime,branch\n";
  for (double s = 0.0; s <= smax + 0.5 * ds; s += ds) {
    const char* branch = s < profile.s_eps ? "kummer" : "tricomi";
    body += num(s) + "," + num(profile.f(s)) + "," + num(profile.fprime(s)) + "," +
            branch + "\n";
  }
  emit(out_path, body);
  return 0;
}

int run_selfsim_figure2(int n, double eps, const std::string& out_dir) {
  const auto profile = selfsim::build_profile(selfsim::solve_alpha(n, eps));
  const int samples = 400;
  const double s_hi = 1.5 * profile.s_eps;
  std::string body = "s,kummer_branch,tricomi_branch\n";
  // The negative branch blows up at s = 0, so sampling starts one step in.
  for (int j = 1; j <= samples; ++j) {
    const double s = s_hi * j / samples;
    const double m = specfun::kummer_m(-profile.alpha / 2.0, n / 2.0, s * s / 4.0);
    const double u = profile.kappa *
                     specfun::tricomi_u(-profile.alpha / 2.0, n / 2.0,
                                        eps * s * s / 4.0);
    body += num(s) + "," + num(m) + "," + num(u) + "\n";
  }
  const std::string csv = out_dir + "/figure2_branches.csv";
  emit(csv, body);
  std::string script =
      "set datafile separator ','\n"
      "set key top right\n"
      "set xlabel 's'\n"
      "set arrow from " + num(profile.s_eps) +
      ", graph 0 to " + num(profile.s_eps) + ", graph 1 nohead dt 2\n"
      "plot 'figure2_branches.csv' using 1:2 with lines lc rgb 'blue' "
      "title 'positive branch', \\\n"
      "     '' using 1:3 with lines lc rgb 'red' title 'negative branch'\n";
  emit(out_dir + "/figure2.gp", script);
  std::cout << "wrote " << csv << " (common zero near s = " << num(profile.s_eps)
            << ")\n";
  return 0;
}

std::map<std::string, std::string> read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error({"cannot open config file '" + path + "'"});
  std::map<std::string, std::string> kv;
  std::vector<std::string> problems;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) +
                         ": expected `key = value`, got '" + line + "'");
      continue;
    }
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      problems.push_back("line " + std::to_string(lineno) + ": empty key or value");
      continue;
    }
    if (!kv.emplace(key, value).second)
      problems.push_back("line " + std::to_string(lineno) + ": duplicate key '" +
                         key + "'");
  }
  if (!problems.empty()) throw config_error(problems);
  return kv;
}

double take_real(std::map<std::string, std::string>& kv, const std::string& key,
                 double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const std::string value = it->second;
  kv.erase(it);
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error({"key '" + key + "': cannot parse '" + value + "'"});
  }
}

int take_int(std::map<std::string, std::string>& kv, const std::string& key,
             int fallback) {
  const double v = take_real(kv, key, fallback);
  if (v != static_cast<int>(v))
    throw config_error({"key '" + key + "' must be an integer"});
  return static_cast<int>(v);
}

std::string take_word(std::map<std::string, std::string>& kv, const std::string& key,
                      const std::string& fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const std::string v = it->second;
  kv.erase(it);
  return v;
}

void write_runlog(const std::string& path, const std::vector<pde::StepLogEntry>& log) {
  auto out = open_out(path);
  for (const auto& entry : log) {
    nlohmann::json j;
    j["step"] = entry.step;
    j["residual"] = entry.residual;
    j["wall_seconds"] = entry.seconds;
    out << j.dump() << "\n";
  }
  if (!out.flush()) throw numeric_error("short write to '" + path + "'");
}

int run_pde_solve(const std::string& kase, const std::string& config_path,
                  std::string out_path, std::string log_path) {
  auto kv = read_flat_config(config_path);
  const int dims = take_int(kv, "dims", 1);
  if (dims < 1 || dims > 2) throw config_error({"dims must be 1 or 2"});
  const std::string geom_word = take_word(kv, "geometry", "cartesian");
  const double a_plus = take_real(kv, "a_plus", 1.0);
  const double a_minus = take_real(kv, "a_minus", 1.0);
  const int steps_x = take_int(kv, "steps_x", 64);
  const int steps_t = take_int(kv, "steps_t", 64);
  const bool radial = geom_word == "radial";
  if (!radial && geom_word != "cartesian")
    throw config_error({"geometry must be cartesian or radial"});
  if (radial && dims != 1) throw config_error({"radial geometry needs dims = 1"});
  const double lo = take_real(kv, "lo", radial ? 0.0 : -1.0);
  const double hi = take_real(kv, "hi", radial ? 3.0 : 1.0);
  const double t0 = take_real(kv, "t0", -1.0);
  const double t1 = take_real(kv, "t1", 0.0);
  const double reg_width = take_real(kv, "reg_width", 2.0 * (hi - lo) / steps_x);

  pde::SpaceTimeBox domain;
  domain.lo.assign(dims, lo);
  domain.hi.assign(dims, hi);
  domain.t0 = t0;
  domain.t1 = t1;
  pde::SolveSteps steps;
  steps.space.assign(dims, steps_x);
  steps.time = steps_t;

  std::vector<pde::StepLogEntry> log;
  GridField field(1, {0.0}, {1.0}, {2}, 0.0, 1.0, 2);
  std::function<GridField()> solve;

  if (kase == "linear") {
    // A quadratic exact solution with compatible interface data: the Hessian
    // jumps only in the last corner, so value and normal slope match across
    // {x_n = 0} automatically.
    pde::PiecewiseQuadratic quad;
    if (dims == 2) {
      quad.A_plus = Eigen::MatrixXd{{1.0, 0.3}, {0.3, 2.0}};
      quad.A_minus = Eigen::MatrixXd{{1.0, 0.3}, {0.3, -1.0}};
      quad.b = Eigen::VectorXd{{0.2, 1.0}};
    } else {
      quad.A_plus = Eigen::MatrixXd{{2.0}};
      quad.A_minus = Eigen::MatrixXd{{-1.0}};
      quad.b = Eigen::VectorXd{{1.0}};
    }
    quad.c = 1.0;
    quad.d = 0.1;
    quad.validate();
    pde::TransmissionSpec spec;
    spec.a_plus = a_plus;
    spec.a_minus = a_minus;
    spec.rhs_plus = [quad, a_plus](const std::vector<double>&, double) {
      return a_plus * quad.c - quad.A_plus.trace();
    };
    spec.rhs_minus = [quad, a_minus](const std::vector<double>&, double) {
      return a_minus * quad.c - quad.A_minus.trace();
    };
    const pde::SpaceFn data = [quad](const std::vector<double>& x, double t) {
      return pde::piecewise_quadratic_eval(quad, x, t);
    };
    solve = [=, &log] {
      return pde::solve_linear_transmission(spec, domain, data, steps, reg_width, &log);
    };
  } else {
    pde::NonlinearOptions opts;
    opts.geometry = radial ? pde::Geometry::radial1d
                           : (dims == 2 ? pde::Geometry::cartesian2d
                                        : pde::Geometry::cartesian1d);
    opts.radial_n = take_int(kv, "n", 3);
    pde::SpaceFn data;
    const std::string selector = take_word(kv, "data", "plane");
    if (selector == "plane") {
      data = [](const std::vector<double>& x, double) { return x.back(); };
    } else if (selector == "perturbed_plane") {
      const double delta = take_real(kv, "delta", 0.01);
      data = [delta](const std::vector<double>& x, double t) {
        const double tangential = x.size() > 1 ? std::cos(2.0 * x[0]) : 1.0;
        return x.back() +
               delta * std::sin(2.0 * x.back()) * tangential *
                   (0.9 + 0.1 * std::sin(3.0 * t));
      };
    } else if (selector == "selfsim") {
      if (!radial) throw config_error({"data = selfsim needs geometry = radial"});
      const double eps = take_real(kv, "eps", 0.1);
      auto profile = selfsim::build_profile(selfsim::solve_alpha(opts.radial_n, eps));
      data = [profile](const std::vector<double>& x, double t) {
        return selfsim::evaluate_u(profile, x, t);
      };
    } else {
      throw config_error({"unknown data selector '" + selector +
                          "'; expected plane, perturbed_plane, or selfsim"});
    }
    solve = [=, &log] {
      return pde::solve_nonlinear(a_plus, a_minus, domain, data, steps, reg_width,
                                  opts, &log);
    };
  }

  // Every key must be consumed before we spend time solving.
  for (const auto& [key, value] : kv)
    throw config_error({"unknown key '" + key + "' = '" + value + "'"});
  field = solve();

  if (out_path.empty()) out_path = kase + "_solution.csv";
  if (log_path.empty()) log_path = kase + "_runlog.jsonl";
  field.write_csv_file(out_path);
  write_runlog(log_path, log);
  const double last_residual = log.empty() ? 0.0 : log.back().residual;
  std::cout << "solved " << field.size() << " nodes; final step residual "
            << num(last_residual) << "\nwrote " << out_path << " and " << log_path
            << "\n";
  return 0;
}

std::string graph_csv(const fbdiag::FreeBoundaryGraph& graph, int dim,
                      bool with_normals) {
  std::string body;
  for (int a = 0; a + 1 < dim; ++a) body += "x" + std::to_string(a + 1) + ",";
  body += "t,g";
  if (with_normals)
    for (int a = 0; a < dim; ++a) body += ",nu" + std::to_string(a + 1);
  body += "\n";
  if (!with_normals) {
    for (const auto& s : graph.samples) {
      for (double c : s.xprime) body += num(c) + ",";
      body += num(s.t) + "," + num(s.g) + "\n";
    }
    return body;
  }
  for (const auto& [index, nu] : graph.fitted_normals) {
    const auto& s = graph.samples[index];
    for (double c : s.xprime) body += num(c) + ",";
    body += num(s.t) + "," + num(s.g);
    for (double c : nu) body += "," + num(c);
    body += "\n";
  }
  return body;
}

int run_fbdiag(const std::string& probe, const std::string& field_path,
               const std::string& center_text, double radius,
               const std::string& radii_text, const std::string& nu_text,
               int iterations, double delta, const std::string& out_path) {
  const GridField field = GridField::read_csv_file(field_path);
  const SpaceTime center = parse_center(center_text, field.dim());
  const ParabolicCylinder window{center.x, center.t, radius};

  if (probe == "extract") {
    const auto graph = fbdiag::extract_free_boundary(field, window);
    emit(out_path, graph_csv(graph, field.dim(), false));
    std::cerr << graph.samples.size() << " zero-set samples\n";
    return 0;
  }
  if (probe == "flatness") {
    const auto nu = split_reals(nu_text, "--nu");
    std::cout << num(fbdiag::flatness(field, window, nu)) << "\n";
    return 0;
  }
  if (probe == "improve") {
    const auto radii = split_reals(radii_text, "--radii");
    const auto report = fbdiag::improvement_of_flatness_probe(field, center, radii);
    std::string body = "radius,deviation";
    for (int a = 0; a < field.dim(); ++a) body += ",nu" + std::to_string(a + 1);
    body += "\n";
    for (std::size_t i = 0; i < report.radii.size(); ++i) {
      body += num(report.radii[i]) + "," + num(report.deviations[i]);
      for (double c : report.normals[i]) body += "," + num(c);
      body += "\n";
    }
    emit(out_path, body);
    if (!report.warning.empty()) std::cerr << "warning: " << report.warning << "\n";
    std::cout << "fitted exponent = " << num(report.fitted_exponent) << "\n";
    return 0;
  }
  if (probe == "harnack") {
    const auto osc = fbdiag::harnack_decay_probe(field, window, iterations, delta);
    std::string body = "level,radius,oscillation\n";
    for (std::size_t i = 0; i < osc.size(); ++i) {
      const double r = radius / std::pow(3.0, static_cast<double>(i));
      body += std::to_string(i) + "," + num(r) + "," + num(osc[i]) + "\n";
    }
    emit(out_path, body);
    return 0;
  }
  // normals
  auto graph = fbdiag::extract_free_boundary(field, window);
  const std::size_t fitted = fbdiag::fit_graph_normals(graph);
  emit(out_path, graph_csv(graph, field.dim(), true));
  std::cerr << fitted << " normals fitted\n";
  if (fitted >= 8) {
    const auto fit = fbdiag::normal_holder_probe(graph);
    std::cout << "holder exponent = " << num(fit.exponent)
              << ", constant = " << num(fit.constant) << "\n";
  } else {
    std::cout << "too few normals for a regularity fit\n";
  }
  return 0;
}

int run_barrier_check(int n, double a_plus, double a_minus, double delta, double c0,
                      int grid) {
  barrier::BarrierSpec spec;
  spec.n = n;
  spec.a_plus = a_plus;
  spec.a_minus = a_minus;
  spec.delta = delta;
  spec.c0 = c0;
  const auto report = barrier::subsolution_check(spec, grid);
  std::cout << "K_used = " << num(report.K_used) << "\n"
            << "max_operator_value = " << num(report.max_operator_value) << "\n"
            << "c = " << num(report.c) << "\n"
            << (report.passed ? "PASS" : "FAIL") << "\n";
  return report.passed ? 0 : 1;
}

int run_hodograph_transform(const std::string& field_path, double lambda,
                            const std::string& out_path) {
  const GridField field = GridField::read_csv_file(field_path);
  const auto patch = hodograph::forward_transform(field, lambda);
  std::ostringstream csv;
  patch.h.write_csv(csv);
  emit(out_path, csv.str());
  std::cerr << "lambda_bar = " << num(patch.lambda_bar)
            << ", interface_index = " << patch.interface_index << "\n";
  return 0;
}

int run_hodograph_verify(const std::string& patch_path, double lambda, double a_plus,
                         double a_minus) {
  const GridField field = GridField::read_csv_file(patch_path);
  const auto patch = hodograph::forward_transform(field, lambda);
  std::cout << "lambda_bar = " << num(patch.lambda_bar) << "\n"
            << "interface_index = " << patch.interface_index << "\n";
  const auto identities = hodograph::derivative_identity_check(patch);
  std::cout << "identity_time_residual = " << num(identities.time) << "\n"
            << "identity_gradient_residual = " << num(identities.gradient) << "\n";
  if (patch.interface_index < 0) {
    std::cout << "no interface row inside the patch; transmission check skipped\n";
    return 0;
  }
  const auto report = hodograph::transmission_residual(patch, a_plus, a_minus);
  std::cout << "transmission_residual_plus = " << num(report.residual_plus) << "\n"
            << "transmission_residual_minus = " << num(report.residual_minus) << "\n"
            << "interface_jump = " << num(report.interface_jump) << "\n";
  return 0;
}

int run_recipe(const std::string& config_path) {
  const auto config = experiment::load_config_file(config_path);
  const auto record = experiment::run_experiment(config);
  for (const auto& a : record.assertions) {
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name;
    if (!a.detail.empty()) std::cout << " (" << a.detail << ")";
    std::cout << "\n";
  }
  for (const auto& artifact : record.artifacts)
    std::cout << "wrote " << config.output_dir << "/" << artifact << "\n";
  std::cout << "wall seconds: " << num(record.wall_seconds) << "\n";
  return record.passed() ? 0 : 1;
}

void apply_thread_override() {
  const char* raw = std::getenv("FBLAB_THREADS");
  if (raw == nullptr || *raw == '\0') return;
  const int threads = std::atoi(raw);
  if (threads < 1)
    throw argument_error("FBLAB_THREADS must be a positive integer, got '" +
                         std::string(raw) + "'");
  Eigen::setNbThreads(threads);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for two-phase free transmission problems"};
  app.require_subcommand(1);
  int status = 0;

  // specfun
  auto* specfun_cmd = app.add_subcommand("specfun", "Confluent hypergeometric kernels");
  specfun_cmd->require_subcommand(1);
  std::string fn = "M";
  double sf_a = 0.0, sf_b = 1.5, sf_z = 1.0, sf_alpha = 1.0, sf_eps = 1.0;
  int sf_n = 3;
  auto* eval_cmd = specfun_cmd->add_subcommand("eval", "Evaluate M or U at a point");
  eval_cmd->add_option("--fn", fn, "M or U")->required()->check(CLI::IsMember({"M", "U"}));
  eval_cmd->add_option("--a", sf_a)->required();
  eval_cmd->add_option("--b", sf_b)->required();
  eval_cmd->add_option("--z", sf_z)->required();
  eval_cmd->callback([&] { status = run_specfun_eval(fn, sf_a, sf_b, sf_z); });
  auto* zero_cmd = specfun_cmd->add_subcommand("zero", "Scaled positive zero");
  zero_cmd->add_option("--fn", fn, "M or U")->required()->check(CLI::IsMember({"M", "U"}));
  zero_cmd->add_option("--alpha", sf_alpha)->required();
  zero_cmd->add_option("--n", sf_n)->required();
  zero_cmd->add_option("--eps", sf_eps, "diffusivity ratio (U only)");
  zero_cmd->callback([&] { status = run_specfun_zero(fn, sf_alpha, sf_n, sf_eps); });

  // selfsim
  auto* selfsim_cmd = app.add_subcommand("selfsim", "Self-similar counterexample profile");
  selfsim_cmd->require_subcommand(1);
  int ss_n = 3;
  double ss_eps = 0.1, ss_tol = 1e-12, ss_smax = 5.0, ss_ds = 0.01;
  std::string ss_out, ss_dir = ".";
  auto* match_cmd = selfsim_cmd->add_subcommand("match", "Solve the exponent matching");
  match_cmd->add_option("--n", ss_n)->required();
  match_cmd->add_option("--eps", ss_eps)->required();
  match_cmd->add_option("--tol", ss_tol);
  match_cmd->callback([&] { status = run_selfsim_match(ss_n, ss_eps, ss_tol); });
  auto* profile_cmd = selfsim_cmd->add_subcommand("profile", "Tabulate f and f'");
  profile_cmd->add_option("--n", ss_n)->required();
  profile_cmd->add_option("--eps", ss_eps)->required();
  profile_cmd->add_option("--smax", ss_smax)->required();
  profile_cmd->add_option("--ds", ss_ds)->required();
  profile_cmd->add_option("--out", ss_out, "CSV path (stdout when omitted)");
  profile_cmd->callback(
      [&] { status = run_selfsim_profile(ss_n, ss_eps, ss_smax, ss_ds, ss_out); });
  auto* fig2_cmd = selfsim_cmd->add_subcommand("figure2", "Two-branch crossing plot");
  fig2_cmd->add_option("--n", ss_n)->required();
  fig2_cmd->add_option("--eps", ss_eps)->required();
  fig2_cmd->add_option("--out-dir", ss_dir, "output directory (default .)");
  fig2_cmd->callback([&] { status = run_selfsim_figure2(ss_n, ss_eps, ss_dir); });

  // pde
  auto* pde_cmd = app.add_subcommand("pde", "Transmission-problem solvers");
  pde_cmd->require_subcommand(1);
  std::string pde_case = "linear", pde_config, pde_out, pde_log;
  auto* solve_cmd = pde_cmd->add_subcommand("solve", "Run a solver from a config file");
  solve_cmd->add_option("--case", pde_case, "linear or nonlinear")
      ->required()
      ->check(CLI::IsMember({"linear", "nonlinear"}));
  solve_cmd->add_option("--config", pde_config, "flat key = value file")->required();
  solve_cmd->add_option("--out", pde_out, "solution CSV path");
  solve_cmd->add_option("--log", pde_log, "JSON-lines step log path");
  solve_cmd->callback(
      [&] { status = run_pde_solve(pde_case, pde_config, pde_out, pde_log); });

  // fbdiag
  auto* fbdiag_cmd = app.add_subcommand("fbdiag", "Free-boundary diagnostics");
  fbdiag_cmd->require_subcommand(1);
  std::string fb_field, fb_center, fb_radii, fb_nu, fb_out;
  double fb_radius = 0.5, fb_delta = 0.01;
  int fb_iterations = 3;
  for (const char* probe : {"extract", "flatness", "improve", "harnack", "normals"}) {
    auto* cmd = fbdiag_cmd->add_subcommand(probe, "");
    cmd->add_option("--field", fb_field, "solution CSV")->required();
    cmd->add_option("--center", fb_center, "window center x1,...,xn,t")->required();
    if (std::strcmp(probe, "improve") == 0)
      cmd->add_option("--radii", fb_radii, "decreasing radii r1,r2,...")->required();
    else
      cmd->add_option("--radius", fb_radius, "window radius")->required();
    if (std::strcmp(probe, "flatness") == 0)
      cmd->add_option("--nu", fb_nu, "direction nu1,...,nun")->required();
    if (std::strcmp(probe, "harnack") == 0) {
      cmd->add_option("--iterations", fb_iterations, "nesting depth");
      cmd->add_option("--delta", fb_delta, "flatness budget at the top scale");
    }
    if (std::strcmp(probe, "flatness") != 0)
      cmd->add_option("--out", fb_out, "CSV path (stdout when omitted)");
    std::string name = probe;
    cmd->callback([&, name] {
      status = run_fbdiag(name, fb_field, fb_center, fb_radius, fb_radii, fb_nu,
                          fb_iterations, fb_delta, fb_out);
    });
  }

  // barrier
  auto* barrier_cmd = app.add_subcommand("barrier", "Subsolution certificates");
  barrier_cmd->require_subcommand(1);
  int ba_n = 2, ba_grid = 160;
  double ba_a_plus = 1.0, ba_a_minus = 1.0, ba_delta = 0.01, ba_c0 = 0.1;
  auto* check_cmd = barrier_cmd->add_subcommand("check", "Certify the barrier at some K");
  check_cmd->add_option("--n", ba_n)->required();
  check_cmd->add_option("--a-plus", ba_a_plus)->required();
  check_cmd->add_option("--a-minus", ba_a_minus)->required();
  check_cmd->add_option("--delta", ba_delta)->required();
  check_cmd->add_option("--c0", ba_c0)->required();
  check_cmd->add_option("--grid", ba_grid, "scan resolution per axis");
  check_cmd->callback([&] {
    status = run_barrier_check(ba_n, ba_a_plus, ba_a_minus, ba_delta, ba_c0, ba_grid);
  });

  // hodograph
  auto* hodo_cmd = app.add_subcommand("hodograph", "Interface straightening");
  hodo_cmd->require_subcommand(1);
  std::string ho_field, ho_out;
  double ho_lambda = 0.05, ho_a_plus = 1.0, ho_a_minus = 1.0;
  auto* transform_cmd = hodo_cmd->add_subcommand("transform", "Invert a monotone patch");
  transform_cmd->add_option("--field", ho_field, "solution CSV")->required();
  transform_cmd->add_option("--lambda", ho_lambda, "monotonicity floor")->required();
  transform_cmd->add_option("--out", ho_out, "h-field CSV (stdout when omitted)");
  transform_cmd->callback(
      [&] { status = run_hodograph_transform(ho_field, ho_lambda, ho_out); });
  auto* verify_cmd = hodo_cmd->add_subcommand("verify", "Residual report for a patch");
  verify_cmd->add_option("--patch", ho_field, "solution CSV to invert and check")
      ->required();
  verify_cmd->add_option("--lambda", ho_lambda, "monotonicity floor");
  verify_cmd->add_option("--a-plus", ho_a_plus);
  verify_cmd->add_option("--a-minus", ho_a_minus);
  verify_cmd->callback([&] {
    status = run_hodograph_verify(ho_field, ho_lambda, ho_a_plus, ho_a_minus);
  });

  // run
  std::string recipe_path;
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment recipe");
  run_cmd->add_option("config", recipe_path, "recipe config file")->required();
  run_cmd->callback([&] { status = run_recipe(recipe_path); });

  try {
    apply_thread_override();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const argument_error& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
  return status;
}
