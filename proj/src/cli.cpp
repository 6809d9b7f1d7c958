#include "blfem/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "blfem/analysis.hpp"
#include "blfem/assembly.hpp"
#include "blfem/corrector.hpp"
#include "blfem/linsolve.hpp"
#include "blfem/mesh.hpp"
#include "blfem/timestep.hpp"

namespace blfem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected `key = value`");
    }
    std::string key = trim(t.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

bool truthy(const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), ::tolower);
  return l == "true" || l == "1" || l == "yes" || l == "on";
}

// Expands `--config FILE` into flags; anything given explicitly wins.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<std::string> merged = args;
  for (const auto& [key, value] : read_config_file(path)) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (value == "true" || value == "false") {
      if (truthy(value)) merged.push_back(flag);
    } else {
      merged.push_back(flag);
      merged.push_back(value);
    }
  }
  return merged;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("not an integer: " + item);
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("not a number: " + item);
    out.push_back(v);
  }
  return out;
}

// Effective configuration of a parsed subcommand, one `key = value` per entry.
std::vector<std::string> effective_config(const CLI::App* cmd) {
  std::vector<std::string> lines{"command = " + cmd->get_name()};
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
    }
    lines.push_back(name + " = " + value);
  }
  return lines;
}

void write_preamble(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << "# " << l << '\n';
}

struct ScenarioOptions {
  Scenario sc;
  std::string scheme = "nfem";
  std::string kind = "phi_m1_lin";
  std::string solver = "auto";
};

void add_scenario_options(CLI::App* cmd, ScenarioOptions& o) {
  cmd->add_option("--problem", o.sc.problem, "exact1d, exact2d, smooth1d, smooth2d, zero1d, zero2d, rate1d");
  cmd->add_option("--epsilon", o.sc.epsilon, "diffusivity");
  cmd->add_option("--T", o.sc.final_time, "final time");
  cmd->add_option("--dt", o.sc.dt, "time step");
  cmd->add_option("--scheme", o.scheme, "sfem or nfem");
  cmd->add_option("--enrichment", o.kind, "phi0, phi0_tilde, phi_m1, phi_m1_lin");
  cmd->add_option("--sigma", o.sc.sigma, "support of phi_m1_lin (0: outermost element layer)");
  cmd->add_option("--cutoff-inner", o.sc.cutoff.inner, "cutoff: 1 below this xi");
  cmd->add_option("--cutoff-outer", o.sc.cutoff.outer, "cutoff: 0 above this xi");
  cmd->add_option("--time-quad-points", o.sc.time_quadrature_points, "Gauss points of the phi0 time integral");
  cmd->add_option("--n", o.sc.n_elements, "1D element count");
  cmd->add_option("--boundary-nodes", o.sc.boundary_nodes, "2D boundary node count");
  cmd->add_option("--mesh", o.sc.mesh_file, "read the mesh from a file");
  cmd->add_option("--quad-triangle-degree", o.sc.quadrature.triangle_degree, "interior triangle rule degree");
  cmd->add_option("--quad-layer-sub", o.sc.quadrature.layer_subintervals, "layer rule sub-intervals");
  cmd->add_option("--quad-layer-gauss", o.sc.quadrature.layer_gauss_points, "layer rule Gauss points");
  cmd->add_option("--quad-angular-sub", o.sc.quadrature.angular_subintervals, "angular sub-intervals");
  cmd->add_option("--quad-angular-gauss", o.sc.quadrature.angular_gauss_points, "angular Gauss points");
  cmd->add_option("--solver", o.solver, "auto, direct, cg");
  cmd->add_option("--rel-tol", o.sc.solver.rel_tolerance, "solver relative residual target");
  cmd->add_option("--max-iter", o.sc.solver.max_iterations, "CG iteration cap (0: 10 x dimension)");
  cmd->add_option("--seed", o.sc.random_seed, "reserved");
}

Scenario finish_scenario(ScenarioOptions& o) {
  o.sc.scheme = scheme_from_string(o.scheme);
  o.sc.kind = enrichment_kind_from_string(o.kind);
  o.sc.solver.method = solver_method_from_string(o.solver);
  o.sc.validate();
  return o.sc;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot write " + path);
  return f;
}

// ---- commands ---------------------------------------------------------------

int cmd_mesh(const CLI::App* cmd, int n, int boundary_nodes, const std::string& output, std::ostream& out,
             std::ostream& err) {
  const auto preamble = effective_config(cmd);
  std::ostringstream body;
  std::ostringstream stats;
  if (n > 0) {
    const Mesh1D mesh = build_interval_mesh(n);
    write_preamble(body, preamble);
    write_mesh(body, mesh);
    stats << "nodes = " << mesh.node_count() << "\nelements = " << mesh.element_count()
          << "\nh = " << format_number(mesh.h) << '\n';
  } else {
    const Mesh2D mesh = build_disk_mesh(boundary_nodes);
    write_preamble(body, preamble);
    write_mesh(body, mesh);
    stats << "nodes = " << mesh.node_count() << "\ntriangles = " << mesh.triangle_count()
          << "\nboundary_nodes = " << mesh.boundary_count() << "\nrings = " << mesh.rings.size()
          << "\nh = " << format_number(mesh.h) << "\nring_width = " << format_number(mesh.ring_width)
          << "\nquality_bound = " << format_number(mesh.quality_bound)
          << "\nmin_angle_deg = " << format_number(mesh.min_angle_deg) << '\n';
  }
  if (output.empty() || output == "-") {
    out << body.str();
    err << stats.str();
  } else {
    auto f = open_output(output);
    f << body.str();
    out << stats.str();
  }
  return kExitOk;
}

void dump_field(std::ostream& f, const RunResult& r, const Scenario& sc) {
  const BuiltinProblem problem = make_builtin_problem(sc.problem, sc.epsilon, sc.final_time);
  const BasisSpace& space = *r.space;
  const Vector& c = r.field.final_coefficients();
  const double t = sc.final_time;
  std::vector<BasisValue> scratch;
  f << "x,y,u_h,u_exact\n";
  auto row = [&](int cell, double x, double y) {
    const double u = evaluate_field(space, c, cell, x, y, t, scratch);
    const double e = problem.exact ? problem.exact(x, y, t) : std::nan("");
    f << format_number(x) << ',' << format_number(y) << ',' << format_number(u) << ',' << format_number(e) << '\n';
  };
  if (space.geometry == Geometry::interval) {
    const Mesh1D& m = space.mesh1d();
    for (int e = 0; e < m.element_count(); ++e) {
      const double a = m.nodes[m.elements[e][0]];
      const double b = m.nodes[m.elements[e][1]];
      for (int k = 0; k < 16; ++k) row(e, a + (b - a) * k / 16.0, 0.0);
    }
    row(m.element_count() - 1, 1.0, 0.0);
  } else {
    const Mesh2D& m = space.mesh2d();
    for (int tr = 0; tr < m.triangle_count(); ++tr) {
      const auto& v = m.triangles[tr];
      for (int k = 0; k < 3; ++k) row(tr, m.nodes[v[k]].x, m.nodes[v[k]].y);
      row(tr, (m.nodes[v[0]].x + m.nodes[v[1]].x + m.nodes[v[2]].x) / 3.0,
          (m.nodes[v[0]].y + m.nodes[v[1]].y + m.nodes[v[2]].y) / 3.0);
    }
  }
}

int cmd_solve(const CLI::App* cmd, ScenarioOptions& o, const std::string& output, const std::string& field,
              const std::string& dump_prefix, bool timings, std::ostream& out, std::ostream& err) {
  const Scenario sc = finish_scenario(o);
  const auto preamble = effective_config(cmd);
  const RunResult r = run_scenario(sc);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';

  write_preamble(out, preamble);
  const ErrorReport& e = r.report;
  out << "scheme = " << to_string(sc.scheme) << '\n'
      << "h = " << format_number(e.h) << '\n'
      << "dofs = " << e.dofs << '\n'
      << "sigma = " << format_number(r.sigma) << '\n'
      << "T_times_epsilon = " << format_number(sc.final_time * sc.epsilon) << '\n';
  if (!r.has_exact) {
    out << "rel_l2 = undefined (no closed-form solution)\n";
  } else if (std::isnan(e.rel_l2)) {
    out << "abs_l2 = " << format_number(e.abs_l2) << '\n'
        << "rel_l2 = undefined (exact solution is identically zero)\n";
  } else {
    out << "rel_l2 = " << format_number(e.rel_l2) << '\n'
        << "abs_l2 = " << format_number(e.abs_l2) << '\n'
        << "h1_err = " << format_number(e.h1_seminorm_error) << '\n'
        << "osc_index = " << format_number(e.oscillation_index) << '\n';
  }
  if (sc.scheme == Scheme::nfem) out << "condition_proxy = " << format_number(r.field.condition_proxy) << '\n';
  if (timings) out << "runtime_s = " << format_number(e.runtime_s) << '\n';

  if (!output.empty()) {
    ConvergenceTable table;
    ConvergenceRow row;
    row.scheme = sc.scheme;
    row.epsilon = sc.epsilon;
    row.h = e.h;
    row.dofs = e.dofs;
    row.dt = sc.dt;
    row.final_time = sc.final_time;
    row.report = e;
    table.rows.push_back(row);
    auto f = open_output(output);
    write_convergence_csv(f, table, timings, preamble);
  }
  if (!field.empty()) {
    auto f = open_output(field);
    write_preamble(f, preamble);
    dump_field(f, r, sc);
  }
  if (!dump_prefix.empty()) {
    const BuiltinProblem problem = make_builtin_problem(sc.problem, sc.epsilon, sc.final_time);
    GalerkinSupplier supplier(r.space, problem.data, sc.quadrature);
    const StepOperators ops = supplier.operators(sc.final_time, sc.final_time - sc.dt);
    auto fm = open_output(dump_prefix + "_mass.txt");
    write_matrix(fm, ops.mass);
    auto fk = open_output(dump_prefix + "_stiffness.txt");
    write_matrix(fk, ops.stiffness);
  }
  return kExitOk;
}

int cmd_converge(const CLI::App* cmd, ScenarioOptions& o, const std::string& levels_text,
                 const std::string& schemes_text, const std::string& output, bool timings, std::ostream& out,
                 std::ostream& err) {
  const Scenario sc = finish_scenario(o);
  const std::vector<int> levels = parse_int_list(levels_text);
  std::vector<Scheme> schemes;
  for (const auto& s : split_list(schemes_text)) schemes.push_back(scheme_from_string(s));
  if (schemes.empty()) throw std::invalid_argument("no schemes requested");
  const auto preamble = effective_config(cmd);
  const ConvergenceTable table = run_convergence_study(sc, levels, schemes);
  if (output.empty() || output == "-") {
    write_convergence_csv(out, table, timings, preamble);
  } else {
    auto f = open_output(output);
    write_convergence_csv(f, table, timings, preamble);
  }
  for (const auto& [scheme, fit] : table.fits) {
    err << to_string(scheme) << " slope = " << format_number(fit.slope)
              << " (fit residual " << format_number(fit.residual) << ")\n";
  }
  const bool any_failed =
      std::any_of(table.rows.begin(), table.rows.end(), [](const ConvergenceRow& r) { return !r.error.empty(); });
  for (const auto& r : table.rows) {
    if (!r.error.empty()) err << "level " << r.level << " (" << to_string(r.scheme) << ") failed: " << r.error << '\n';
  }
  return any_failed ? kExitNumericalFailure : kExitOk;
}

int cmd_corrector(const CLI::App* cmd, double epsilon, double t, double sigma, double xi_min, double xi_max,
                  int points, int tq, const std::string& output, std::ostream& out) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive for the time-dependent profiles");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (points < 2) throw std::invalid_argument("points must be >= 2");
  if (xi_min == 0.0) xi_min = 1e-2 * std::sqrt(epsilon);
  if (!(xi_min > 0.0 && xi_max > xi_min && xi_max <= 1.0)) throw std::invalid_argument("need 0 < xi-min < xi-max <= 1");
  EnrichmentSpec spec;
  spec.epsilon = epsilon;
  spec.sigma = sigma;
  spec.time_quadrature_points = tq;
  spec.validate();
  auto profile = [&](EnrichmentKind k, double xi) {
    EnrichmentSpec s = spec;
    s.kind = k;
    return enrichment_profile(s, xi, t);
  };
  std::ostringstream body;
  write_preamble(body, effective_config(cmd));
  body << "xi,phi0,phi0_tilde,phi_m1,phi_m1_lin\n";
  auto row = [&](double xi) {
    body << format_number(xi) << ',' << format_number(profile(EnrichmentKind::phi0, xi)) << ','
         << format_number(profile(EnrichmentKind::phi0_tilde, xi)) << ','
         << format_number(profile(EnrichmentKind::phi_minus1, xi)) << ','
         << format_number(profile(EnrichmentKind::phi_minus1_lin, xi)) << '\n';
  };
  row(0.0);
  for (int i = 0; i < points; ++i) row(xi_min * std::pow(xi_max / xi_min, static_cast<double>(i) / (points - 1)));
  if (output.empty() || output == "-") {
    out << body.str();
  } else {
    auto f = open_output(output);
    f << body.str();
  }
  return kExitOk;
}

int cmd_rates(const CLI::App* cmd, const std::string& eps_text, double sample_every, int intervals, double ref_dt,
              double points_per_layer, const std::string& output, std::ostream& out) {
  const std::vector<double> eps = parse_double_list(eps_text);
  ReferenceConfig rc;
  rc.intervals = intervals;
  rc.dt = ref_dt;
  rc.points_per_layer = points_per_layer;
  const RateStudy study = epsilon_rate_study(
      [](double e) { return make_builtin_problem("rate1d", e, 1.0).data; }, eps, sample_every, rc);
  std::ostringstream body;
  write_preamble(body, effective_config(cmd));
  body << "epsilon,l2_err,h1_err\n";
  for (std::size_t i = 0; i < eps.size(); ++i) {
    body << format_number(eps[i]) << ',' << format_number(study.l2_errors[i]) << ','
         << format_number(study.h1_errors[i]) << '\n';
  }
  body << "# l2_slope = " << format_number(study.l2_fit.slope) << '\n'
       << "# h1_slope = " << format_number(study.h1_fit.slope) << '\n'
       << "# monotone = " << (study.monotone ? "true" : "false") << '\n';
  if (study.degenerate) body << "# degenerate = true (errors vanish identically)\n";
  if (output.empty() || output == "-") {
    out << body.str();
  } else {
    auto f = open_output(output);
    f << body.str();
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Enriched finite elements for the singularly perturbed heat equation", "blfem"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  std::string config_path;

  // mesh
  CLI::App* mesh = app.add_subcommand("mesh", "generate a mesh file");
  int mesh_n = 0;
  int mesh_boundary = 52;
  std::string mesh_out;
  mesh->add_option("--config", config_path, "key = value file");
  mesh->add_option("--n", mesh_n, "1D element count (selects the interval)");
  mesh->add_option("--boundary-nodes", mesh_boundary, "disk boundary node count");
  mesh->add_option("-o,--output", mesh_out, "output file (default stdout)");

  // solve
  CLI::App* solve = app.add_subcommand("solve", "run one scenario and report errors");
  ScenarioOptions solve_opts;
  std::string solve_out, solve_field, solve_dump;
  bool solve_timings = false;
  solve->add_option("--config", config_path, "key = value file");
  add_scenario_options(solve, solve_opts);
  solve->add_option("-o,--output", solve_out, "CSV row per the convergence schema");
  solve->add_option("--field", solve_field, "CSV samples of the final field");
  solve->add_option("--dump-matrix", solve_dump, "write <prefix>_mass.txt and <prefix>_stiffness.txt");
  solve->add_flag("--timings", solve_timings, "report wall-clock runtime");

  // converge
  CLI::App* converge = app.add_subcommand("converge", "mesh convergence study, CSV output");
  ScenarioOptions conv_opts;
  std::string conv_levels = "25,50,100,200";
  std::string conv_schemes = "sfem,nfem";
  std::string conv_out;
  bool conv_timings = false;
  converge->add_option("--config", config_path, "key = value file");
  add_scenario_options(converge, conv_opts);
  converge->add_option("--levels", conv_levels, "comma-separated n (1D) or boundary node counts (2D)");
  converge->add_option("--schemes", conv_schemes, "comma-separated schemes");
  converge->add_option("-o,--output", conv_out, "CSV file (default stdout)");
  converge->add_flag("--timings", conv_timings, "fill the runtime_s column");

  // corrector
  CLI::App* corr = app.add_subcommand("corrector", "sample the boundary-layer profiles");
  double corr_eps = 1e-5, corr_t = 1.0, corr_sigma = 0.02, corr_xmin = 0.0, corr_xmax = 1.0;
  int corr_points = 200, corr_tq = 48;
  std::string corr_out;
  corr->add_option("--config", config_path, "key = value file");
  corr->add_option("--epsilon", corr_eps, "diffusivity");
  corr->add_option("--t", corr_t, "time");
  corr->add_option("--sigma", corr_sigma, "support of phi_m1_lin");
  corr->add_option("--xi-min", corr_xmin, "smallest positive xi (0: sqrt(eps)/100)");
  corr->add_option("--xi-max", corr_xmax, "largest xi");
  corr->add_option("--points", corr_points, "log-spaced samples");
  corr->add_option("--time-quad-points", corr_tq, "Gauss points of the phi0 time integral");
  corr->add_option("-o,--output", corr_out, "CSV file (default stdout)");

  // rates
  CLI::App* rates = app.add_subcommand("rates", "epsilon rates of the asymptotic expansion (1D)");
  std::string rates_eps = "1e-3,1e-4,1e-5,1e-6";
  double rates_every = 0.05, rates_dt = ReferenceConfig{}.dt, rates_ppl = ReferenceConfig{}.points_per_layer;
  int rates_intervals = ReferenceConfig{}.intervals;
  std::string rates_out;
  rates->add_option("--config", config_path, "key = value file");
  rates->add_option("--epsilons", rates_eps, "comma-separated epsilons");
  rates->add_option("--sample-every", rates_every, "time between norm samples");
  rates->add_option("--intervals", rates_intervals, "reference grid intervals");
  rates->add_option("--ref-dt", rates_dt, "reference time step");
  rates->add_option("--points-per-layer", rates_ppl, "reference grid points per sqrt(eps) at the boundary");
  rates->add_option("-o,--output", rates_out, "CSV file (default stdout)");

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  try {
    if (mesh->parsed()) return cmd_mesh(mesh, mesh_n, mesh_boundary, mesh_out, out, err);
    if (solve->parsed()) {
      return cmd_solve(solve, solve_opts, solve_out, solve_field, solve_dump, solve_timings, out, err);
    }
    if (converge->parsed()) return cmd_converge(converge, conv_opts, conv_levels, conv_schemes, conv_out, conv_timings, out, err);
    if (corr->parsed()) {
      return cmd_corrector(corr, corr_eps, corr_t, corr_sigma, corr_xmin, corr_xmax, corr_points, corr_tq, corr_out,
                           out);
    }
    if (rates->parsed()) return cmd_rates(rates, rates_eps, rates_every, rates_intervals, rates_dt, rates_ppl, rates_out, out);
  } catch (const SolverError& e) {
    err << "numerical failure: " << e.what() << " (residual " << format_number(e.residual()) << ")\n";
    return kExitNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const std::out_of_range& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  }
  return kExitInvalidInput;
}

}  // namespace blfem
