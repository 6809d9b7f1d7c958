#include "blfem/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "blfem/parallel.hpp"
#include "blfem/specfun.hpp"

namespace blfem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

// Layer factor A(x) = 1 - e^{-sx} cos(sx) and its derivatives.
struct LayerFactor {
  double a, da, dda;
};

LayerFactor layer_factor(double s, double x) {
  const double e = std::exp(-s * x);
  const double c = std::cos(s * x);
  const double sn = std::sin(s * x);
  return {1.0 - e * c, s * e * (c + sn), -2.0 * s * s * e * sn};
}

// u_xx / t for the 1D exact solution.
double exact_1d_second_derivative_factor(double epsilon, double x) {
  const double s = 1.0 / std::sqrt(epsilon);
  const LayerFactor a = layer_factor(s, x);
  const LayerFactor b0 = layer_factor(s, 1.0 - x);
  // B(x) = A(1 - x): B' = -A'(1 - x), B'' = A''(1 - x)
  const double b = b0.a, db = -b0.da, ddb = b0.dda;
  return a.dda * b + 2.0 * a.da * db + a.a * ddb;
}

double exact_1d_product(double epsilon, double x) {
  const double s = 1.0 / std::sqrt(epsilon);
  return layer_factor(s, x).a * layer_factor(s, 1.0 - x).a;
}

// I0(r s) / I0(s) e^{...} written with scaled Bessel functions.
double bessel_ratio(double epsilon, double r) {
  const double s = 1.0 / std::sqrt(epsilon);
  return bessel_i0_scaled(r * s) / bessel_i0_scaled(s) * std::exp((r - 1.0) * s);
}

double radius(double x, double y) { return std::min(1.0, std::hypot(x, y)); }

}  // namespace

// ---------------------------------------------------------------------------
// exact solutions

double exact_solution_1d(double epsilon, double x, double t) { return t * exact_1d_product(epsilon, x); }

double exact_derivative_1d(double epsilon, double x, double t) {
  const double s = 1.0 / std::sqrt(epsilon);
  const LayerFactor a = layer_factor(s, x);
  const LayerFactor b = layer_factor(s, 1.0 - x);
  return t * (a.da * b.a - a.a * b.da);
}

double source_f_1d(double epsilon, double x, double t) {
  return exact_1d_product(epsilon, x) - epsilon * t * exact_1d_second_derivative_factor(epsilon, x);
}

double exact_solution_2d(double epsilon, double r, double t) {
  return std::exp(t) * (1.0 - bessel_ratio(epsilon, std::min(r, 1.0)));
}

double exact_radial_derivative_2d(double epsilon, double r, double t) {
  const double s = 1.0 / std::sqrt(epsilon);
  r = std::min(r, 1.0);
  return -std::exp(t) * s * bessel_i1_scaled(r * s) / bessel_i0_scaled(s) * std::exp((r - 1.0) * s);
}

std::vector<std::string> builtin_problem_names() {
  return {"exact1d", "exact2d", "smooth1d", "smooth2d", "zero1d", "zero2d", "rate1d"};
}

BuiltinProblem make_builtin_problem(const std::string& name, double epsilon, double final_time) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  BuiltinProblem p;
  p.name = name;
  p.data.epsilon = epsilon;
  p.data.final_time = final_time;
  const double eps = epsilon;
  if (name == "exact1d") {
    p.data.geometry = Geometry::interval;
    p.data.f = [eps](double x, double, double t) { return source_f_1d(eps, x, t); };
    p.data.f_antiderivative = [eps](double x, double, double t) {
      return t * exact_1d_product(eps, x) - 0.5 * eps * t * t * exact_1d_second_derivative_factor(eps, x);
    };
    p.data.f_terms = {{[](double) { return 1.0; }, [eps](double x, double) { return exact_1d_product(eps, x); }},
                      {[](double t) { return t; },
                       [eps](double x, double) { return -eps * exact_1d_second_derivative_factor(eps, x); }}};
    p.data.u0_initial = [](double, double) { return 0.0; };
    p.exact = [eps](double x, double, double t) { return exact_solution_1d(eps, x, t); };
    p.exact_grad = [eps](double x, double, double t) { return Point2{exact_derivative_1d(eps, x, t), 0.0}; };
  } else if (name == "exact2d") {
    p.data.geometry = Geometry::disk;
    p.data.f = [](double, double, double t) { return std::exp(t); };
    p.data.f_antiderivative = [](double, double, double t) { return std::expm1(t); };
    p.data.f_terms = {{[](double t) { return std::exp(t); }, [](double, double) { return 1.0; }}};
    p.data.u0_initial = [eps](double x, double y) { return exact_solution_2d(eps, radius(x, y), 0.0); };
    p.exact = [eps](double x, double y, double t) { return exact_solution_2d(eps, radius(x, y), t); };
    p.exact_grad = [eps](double x, double y, double t) {
      const double r = std::hypot(x, y);
      if (r == 0.0) return Point2{0.0, 0.0};
      const double ur = exact_radial_derivative_2d(eps, r, t);
      return Point2{ur * x / r, ur * y / r};
    };
  } else if (name == "smooth1d") {
    p.data.geometry = Geometry::interval;
    p.data.f = [eps](double x, double, double t) { return (1.0 + eps * kPi * kPi * t) * std::sin(kPi * x); };
    p.data.f_antiderivative = [eps](double x, double, double t) {
      return (t + 0.5 * eps * kPi * kPi * t * t) * std::sin(kPi * x);
    };
    p.data.f_terms = {{[](double) { return 1.0; }, [](double x, double) { return std::sin(kPi * x); }},
                      {[](double t) { return t; }, [eps](double x, double) { return eps * kPi * kPi * std::sin(kPi * x); }}};
    p.data.u0_initial = [](double, double) { return 0.0; };
    p.exact = [](double x, double, double t) { return t * std::sin(kPi * x); };
    p.exact_grad = [](double x, double, double t) { return Point2{t * kPi * std::cos(kPi * x), 0.0}; };
  } else if (name == "smooth2d") {
    p.data.geometry = Geometry::disk;
    p.data.f = [eps](double x, double y, double t) { return 1.0 - x * x - y * y + 4.0 * eps * t; };
    p.data.f_antiderivative = [eps](double x, double y, double t) {
      return t * (1.0 - x * x - y * y) + 2.0 * eps * t * t;
    };
    p.data.f_terms = {{[](double) { return 1.0; }, [](double x, double y) { return 1.0 - x * x - y * y; }},
                      {[](double t) { return t; }, [eps](double, double) { return 4.0 * eps; }}};
    p.data.u0_initial = [](double, double) { return 0.0; };
    p.exact = [](double x, double y, double t) { return t * (1.0 - x * x - y * y); };
    p.exact_grad = [](double x, double y, double t) { return Point2{-2.0 * t * x, -2.0 * t * y}; };
  } else if (name == "zero1d" || name == "zero2d") {
    p.data.geometry = name == "zero1d" ? Geometry::interval : Geometry::disk;
    p.data.f = [](double, double, double) { return 0.0; };
    p.data.f_antiderivative = [](double, double, double) { return 0.0; };
    p.data.u0_initial = [](double, double) { return 0.0; };
    p.exact = [](double, double, double) { return 0.0; };
    p.exact_grad = [](double, double, double) { return Point2{0.0, 0.0}; };
  } else if (name == "rate1d") {
    p.data.geometry = Geometry::interval;
    p.data.f = [](double x, double, double t) { return t * (1.0 + std::sin(kPi * x)); };
    p.data.f_antiderivative = [](double x, double, double t) { return 0.5 * t * t * (1.0 + std::sin(kPi * x)); };
    p.data.f_terms = {{[](double t) { return t; }, [](double x, double) { return 1.0 + std::sin(kPi * x); }}};
    p.data.u0_initial = [](double, double) { return 0.0; };
  } else {
    throw std::invalid_argument("unknown problem: " + name);
  }
  return p;
}

// ---------------------------------------------------------------------------
// errors

namespace {

struct ErrorSums {
  double err2 = 0.0;
  double exact2 = 0.0;
  double grad_err2 = 0.0;
  double max_exact = 0.0;
  double max_overshoot = 0.0;
};

ErrorSums accumulate_errors(const BasisSpace& space, const IntegrationPlan& plan, const Vector& c, double t,
                            const SpaceTimeFn& exact, const GradientFn& grad, bool want_oscillation) {
  const int n_pieces = plan.piece_count();
  const int chunks = std::min(64, n_pieces);
  std::vector<ErrorSums> partial(chunks);
  parallel_for(chunks, [&](int chunk) {
    const int begin = static_cast<int>(static_cast<long long>(n_pieces) * chunk / chunks);
    const int end = static_cast<int>(static_cast<long long>(n_pieces) * (chunk + 1) / chunks);
    Piece piece;
    std::vector<BasisValue> vals;
    ErrorSums& s = partial[chunk];
    for (int p = begin; p < end; ++p) {
      plan.build_piece(p, piece);
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      double num_lo = lo;
      double num_hi = -lo;
      auto sample = [&](double x, double y, double w) {
        evaluate_basis(space, piece.cell, x, y, t, vals);
        double u = 0.0, ux = 0.0, uy = 0.0;
        for (const auto& b : vals) {
          u += c[b.dof] * b.value;
          ux += c[b.dof] * b.dx;
          uy += c[b.dof] * b.dy;
        }
        const double ue = exact(x, y, t);
        if (w > 0.0) {
          s.err2 += w * (ue - u) * (ue - u);
          s.exact2 += w * ue * ue;
          if (grad) {
            const Point2 g = grad(x, y, t);
            s.grad_err2 += w * ((g.x - ux) * (g.x - ux) + (g.y - uy) * (g.y - uy));
          }
        }
        s.max_exact = std::max(s.max_exact, std::abs(ue));
        lo = std::min(lo, ue);
        hi = std::max(hi, ue);
        num_lo = std::min(num_lo, u);
        num_hi = std::max(num_hi, u);
      };
      for (const auto& q : piece.points) sample(q.x, q.y, q.w);
      if (want_oscillation && piece.xi_min < 0.25) {
        for (const auto& v : piece.probes) sample(v.x, v.y, 0.0);
        if (hi >= lo) s.max_overshoot = std::max({s.max_overshoot, num_hi - hi, lo - num_lo, 0.0});
      }
    }
  });
  ErrorSums total;
  for (const auto& s : partial) {
    total.err2 += s.err2;
    total.exact2 += s.exact2;
    total.grad_err2 += s.grad_err2;
    total.max_exact = std::max(total.max_exact, s.max_exact);
    total.max_overshoot = std::max(total.max_overshoot, s.max_overshoot);
  }
  return total;
}

}  // namespace

ErrorReport compute_errors(const BasisSpace& space, const IntegrationPlan& plan, const Vector& coefficients, double t,
                           const SpaceTimeFn& exact, const GradientFn& exact_grad) {
  if (!exact) throw std::invalid_argument("compute_errors needs an exact solution");
  const ErrorSums s = accumulate_errors(space, plan, coefficients, t, exact, exact_grad, true);
  ErrorReport r;
  r.abs_l2 = std::sqrt(s.err2);
  r.exact_l2 = std::sqrt(s.exact2);
  r.rel_l2 = r.exact_l2 < 1e-300 ? kNaN : r.abs_l2 / r.exact_l2;
  r.h1_seminorm_error = exact_grad ? std::sqrt(s.grad_err2) : kNaN;
  r.oscillation_index = s.max_exact > 0.0 ? s.max_overshoot / s.max_exact : 0.0;
  r.h = space.h();
  r.dofs = space.size();
  return r;
}

double relative_l2_error(const BasisSpace& space, const IntegrationPlan& plan, const Vector& coefficients, double t,
                         const SpaceTimeFn& exact) {
  const ErrorSums s = accumulate_errors(space, plan, coefficients, t, exact, {}, false);
  if (std::sqrt(s.exact2) < 1e-300) throw std::domain_error("relative error undefined: exact solution has zero norm");
  return std::sqrt(s.err2 / s.exact2);
}

double oscillation_index(const BasisSpace& space, const IntegrationPlan& plan, const Vector& coefficients, double t,
                         const SpaceTimeFn& exact) {
  const ErrorSums s = accumulate_errors(space, plan, coefficients, t, exact, {}, true);
  return s.max_exact > 0.0 ? s.max_overshoot / s.max_exact : 0.0;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i]) && x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log10(x[i]));
      ly.push_back(std::log10(y[i]));
    }
  }
  LineFit fit;
  fit.points = static_cast<int>(lx.size());
  if (lx.size() < 2) {
    fit.slope = fit.intercept = fit.residual = kNaN;
    return fit;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : kNaN;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double d = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += d * d;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

// ---------------------------------------------------------------------------
// scenarios

std::string to_string(Scheme scheme) { return scheme == Scheme::sfem ? "sfem" : "nfem"; }

Scheme scheme_from_string(const std::string& name) {
  if (name == "sfem") return Scheme::sfem;
  if (name == "nfem") return Scheme::nfem;
  throw std::invalid_argument("unknown scheme: " + name);
}

void Scenario::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(final_time > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  if (n_elements < 2) throw std::invalid_argument("n must be >= 2");
  if (boundary_nodes < 8) throw std::invalid_argument("boundary node count must be >= 8");
  if (time_quadrature_points < 1 || time_quadrature_points > 64) {
    throw std::invalid_argument("time quadrature points must be in [1, 64]");
  }
  cutoff.validate();
  quadrature.validate();
  solver.validate();
  const auto names = builtin_problem_names();
  if (std::find(names.begin(), names.end(), problem) == names.end()) {
    throw std::invalid_argument("unknown problem: " + problem);
  }
  TimeGrid::make(final_time, dt);
}

Mesh scenario_mesh(const Scenario& scenario) {
  const bool one_d = scenario.problem.size() >= 2 && scenario.problem.substr(scenario.problem.size() - 2) == "1d";
  if (!scenario.mesh_file.empty()) {
    std::ifstream in(scenario.mesh_file);
    if (!in) throw std::invalid_argument("cannot open mesh file " + scenario.mesh_file);
    Mesh mesh = read_mesh(in);
    if (std::holds_alternative<Mesh1D>(mesh) != one_d) {
      throw std::invalid_argument("mesh dimension does not match problem " + scenario.problem);
    }
    return mesh;
  }
  if (one_d) return build_interval_mesh(scenario.n_elements);
  return build_disk_mesh(scenario.boundary_nodes);
}

std::shared_ptr<const BasisSpace> scenario_space(const Scenario& scenario, Mesh mesh, double* sigma_out) {
  std::optional<EnrichmentSpec> enrichment;
  double sigma = scenario.sigma;
  if (sigma == 0.0) {
    sigma = std::holds_alternative<Mesh1D>(mesh) ? std::get<Mesh1D>(mesh).h : std::get<Mesh2D>(mesh).ring_width;
    sigma = std::min(sigma, scenario.cutoff.outer);
  }
  if (scenario.scheme == Scheme::nfem) {
    EnrichmentSpec spec;
    spec.kind = scenario.kind;
    spec.epsilon = scenario.epsilon;
    spec.sigma = sigma;
    spec.cutoff = scenario.cutoff;
    spec.time_quadrature_points = scenario.time_quadrature_points;
    enrichment = spec;
  }
  if (sigma_out) *sigma_out = sigma;
  return std::make_shared<const BasisSpace>(make_space(std::move(mesh), enrichment));
}

RunResult run_scenario(const Scenario& scenario) {
  const auto start = std::chrono::steady_clock::now();
  scenario.validate();
  const TimeGrid grid = TimeGrid::make(scenario.final_time, scenario.dt);
  const BuiltinProblem problem = make_builtin_problem(scenario.problem, scenario.epsilon, scenario.final_time);

  RunResult result;
  result.warnings = problem.data.check_compatibility();
  result.space = scenario_space(scenario, scenario_mesh(scenario), &result.sigma);
  result.has_exact = static_cast<bool>(problem.exact);

  GalerkinSupplier supplier(result.space, problem.data, scenario.quadrature);
  const Vector initial = supplier.initial_coefficients(scenario.solver);
  result.field = advance(supplier, grid, initial, scenario.solver, false);
  result.field.space = result.space;

  if (problem.exact) {
    result.report = compute_errors(*result.space, supplier.plan(), result.field.final_coefficients(),
                                   scenario.final_time, problem.exact, problem.exact_grad);
  } else {
    result.report.rel_l2 = result.report.abs_l2 = result.report.h1_seminorm_error = kNaN;
    result.report.oscillation_index = kNaN;
    result.report.h = result.space->h();
    result.report.dofs = result.space->size();
  }
  result.report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// convergence

std::optional<LineFit> ConvergenceTable::fit(Scheme scheme) const {
  for (const auto& [s, f] : fits) {
    if (s == scheme) return f;
  }
  return std::nullopt;
}

std::vector<double> ConvergenceTable::errors(Scheme scheme) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.scheme == scheme) out.push_back(r.error.empty() ? r.report.rel_l2 : kNaN);
  }
  return out;
}

ConvergenceTable run_convergence_study(const Scenario& base, const std::vector<int>& levels,
                                       const std::vector<Scheme>& schemes) {
  if (levels.size() < 3) throw std::invalid_argument("a convergence study needs at least 3 mesh levels");
  std::vector<int> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 3) throw std::invalid_argument("a convergence study needs at least 3 distinct mesh levels");

  ConvergenceTable table;
  for (Scheme scheme : schemes) {
    for (int level : sorted) {
      ConvergenceRow row;
      row.scheme = scheme;
      row.level = level;
      row.epsilon = base.epsilon;
      row.dt = base.dt;
      row.final_time = base.final_time;
      table.rows.push_back(row);
    }
  }
  parallel_for(static_cast<int>(table.rows.size()), [&](int i) {
    ConvergenceRow& row = table.rows[i];
    Scenario sc = base;
    sc.scheme = row.scheme;
    const bool one_d = sc.problem.size() >= 2 && sc.problem.substr(sc.problem.size() - 2) == "1d";
    (one_d ? sc.n_elements : sc.boundary_nodes) = row.level;
    sc.mesh_file.clear();
    try {
      const RunResult r = run_scenario(sc);
      row.report = r.report;
      row.h = r.report.h;
      row.dofs = r.report.dofs;
    } catch (const std::exception& e) {
      row.error = e.what();
      try {
        Mesh mesh = scenario_mesh(sc);
        row.h = std::visit([](const auto& m) { return m.h; }, mesh);
      } catch (const std::exception&) {
        row.h = kNaN;
      }
    }
  });
  for (Scheme scheme : schemes) {
    std::vector<double> hs, es;
    for (const auto& r : table.rows) {
      if (r.scheme == scheme && r.error.empty()) {
        hs.push_back(r.h);
        es.push_back(r.report.rel_l2);
      }
    }
    LineFit fit = fit_loglog(hs, es);
    if (fit.points < 3) fit.slope = fit.intercept = fit.residual = kNaN;
    table.fits.emplace_back(scheme, fit);
  }
  return table;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table, bool include_runtime,
                           const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "scheme,epsilon,h,dofs,dt,T,rel_l2,h1_err,osc_index,runtime_s\n";
  for (const auto& r : table.rows) {
    out << to_string(r.scheme) << ',' << format_number(r.epsilon) << ',' << format_number(r.h) << ',';
    if (r.error.empty()) {
      out << r.dofs << ',' << format_number(r.dt) << ',' << format_number(r.final_time) << ','
          << format_number(r.report.rel_l2) << ',' << format_number(r.report.h1_seminorm_error) << ','
          << format_number(r.report.oscillation_index) << ','
          << format_number(include_runtime ? r.report.runtime_s : kNaN) << '\n';
    } else {
      out << "error," << format_number(r.dt) << ',' << format_number(r.final_time) << ",error,error,error,error\n";
    }
  }
}

// ---------------------------------------------------------------------------
// epsilon rates

double asymptotic_approximation_1d(const ProblemData& data, const CutoffSpec& cutoff, double x, double t) {
  double u = limit_solution(data, x, 0.0, t);
  const double d0 = cutoff_delta(cutoff, x);
  if (d0 > 0.0) u += d0 * theta0(data, 0.0, x, t);
  const double d1 = cutoff_delta(cutoff, 1.0 - x);
  if (d1 > 0.0) u += d1 * theta0(data, kPi, 1.0 - x, t);
  return u;
}

RateStudy epsilon_rate_study(const std::function<ProblemData(double epsilon)>& family,
                             const std::vector<double>& epsilons, double sample_every,
                             const ReferenceConfig& config) {
  if (epsilons.size() < 3) throw std::invalid_argument("rate study needs at least 3 epsilon values");
  if (!(sample_every > 0.0)) throw std::invalid_argument("sample interval must be positive");
  RateStudy study;
  study.epsilons = epsilons;
  study.l2_errors.assign(epsilons.size(), 0.0);
  study.h1_errors.assign(epsilons.size(), 0.0);
  const CutoffSpec cutoff;

  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const ProblemData data = family(epsilons[e]);
    if (data.geometry != Geometry::interval) throw std::invalid_argument("rate study supports the interval only");
    const int n_samples = static_cast<int>(std::llround(data.final_time / sample_every));
    std::vector<double> times;
    for (int k = 1; k <= n_samples; ++k) times.push_back(data.final_time * k / n_samples);
    const ReferenceSolution ref = solve_reference_1d(data, times, config);
    const int nx = static_cast<int>(ref.x.size());
    std::vector<double> l2(times.size()), h1(times.size());
    parallel_for(static_cast<int>(times.size()), [&](int k) {
      std::vector<double> err(nx);
      for (int i = 0; i < nx; ++i) {
        err[i] = ref.values[k][i] - asymptotic_approximation_1d(data, cutoff, ref.x[i], times[k]);
      }
      double s2 = 0.0, g2 = 0.0;
      for (int i = 0; i + 1 < nx; ++i) {
        const double hx = ref.x[i + 1] - ref.x[i];
        s2 += 0.5 * hx * (err[i] * err[i] + err[i + 1] * err[i + 1]);
        g2 += (err[i + 1] - err[i]) * (err[i + 1] - err[i]) / hx;
      }
      l2[k] = std::sqrt(s2);
      h1[k] = std::sqrt(g2);
    });
    study.l2_errors[e] = *std::max_element(l2.begin(), l2.end());
    study.h1_errors[e] = *std::max_element(h1.begin(), h1.end());
  }

  study.degenerate = std::all_of(study.l2_errors.begin(), study.l2_errors.end(), [](double v) { return v == 0.0; });
  if (study.degenerate) {
    study.l2_fit.slope = study.h1_fit.slope = kNaN;
    study.monotone = false;
    return study;
  }
  std::vector<std::size_t> order(epsilons.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return epsilons[a] > epsilons[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (!(study.l2_errors[order[i]] < study.l2_errors[order[i - 1]])) study.monotone = false;
  }
  study.l2_fit = fit_loglog(study.epsilons, study.l2_errors);
  study.h1_fit = fit_loglog(study.epsilons, study.h1_errors);
  return study;
}

}  // namespace blfem
