#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blfem/assembly.hpp"
#include "blfem/corrector.hpp"
#include "blfem/timestep.hpp"

namespace blfem {

// ---- exact solutions -------------------------------------------------------

/// u = t (1 - e^{-x/s} cos(x/s)) (1 - e^{-(1-x)/s} cos((1-x)/s)), s = sqrt(eps).
double exact_solution_1d(double epsilon, double x, double t);
double exact_derivative_1d(double epsilon, double x, double t);
/// u_t - eps u_xx from hand-derived derivatives.
double source_f_1d(double epsilon, double x, double t);

/// u = e^t (1 - I0(r/s)/I0(1/s)), s = sqrt(eps); source e^t.
double exact_solution_2d(double epsilon, double r, double t);
double exact_radial_derivative_2d(double epsilon, double r, double t);

using GradientFn = std::function<Point2(double x, double y, double t)>;

/// Problem data plus an optional closed-form solution.
struct BuiltinProblem {
  std::string name;
  ProblemData data;
  SpaceTimeFn exact;      // empty if unknown
  GradientFn exact_grad;  // empty if unknown
};

/// exact1d, exact2d, smooth1d, smooth2d, zero1d, zero2d, rate1d.
BuiltinProblem make_builtin_problem(const std::string& name, double epsilon, double final_time);
std::vector<std::string> builtin_problem_names();

// ---- errors ----------------------------------------------------------------

struct ErrorReport {
  double rel_l2 = 0.0;  // NaN when the exact solution vanishes
  double abs_l2 = 0.0;
  double exact_l2 = 0.0;
  double h1_seminorm_error = 0.0;
  double oscillation_index = 0.0;
  double h = 0.0;
  int dofs = 0;
  double runtime_s = 0.0;
};

/// Norms of the discrete field at time t against an exact solution, on the
/// layer-resolving integration plan. rel_l2 is NaN if ||exact|| < 1e-300.
ErrorReport compute_errors(const BasisSpace& space, const IntegrationPlan& plan, const Vector& coefficients,
                           double t, const SpaceTimeFn& exact, const GradientFn& exact_grad);

/// ||u_exact - u_N|| / ||u_exact||; throws std::domain_error if ||u_exact|| < 1e-300.
double relative_l2_error(const BasisSpace& space, const IntegrationPlan& plan, const Vector& coefficients, double t,
                         const SpaceTimeFn& exact);

/// Largest overshoot of the discrete field beyond the exact solution's range
/// on each piece within xi < 0.25, divided by max |exact|.
double oscillation_index(const BasisSpace& space, const IntegrationPlan& plan, const Vector& coefficients, double t,
                         const SpaceTimeFn& exact);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of log10 residuals
  int points = 0;
};

/// Least squares on (log10 x, log10 y); pairs with non-finite or non-positive
/// entries are skipped. Needs >= 2 usable pairs, else slope is NaN.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// ---- scenarios -------------------------------------------------------------

enum class Scheme { sfem, nfem };
std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct Scenario {
  std::string problem = "exact1d";
  double epsilon = 1e-5;
  double final_time = 1.0;
  double dt = 0.01;
  Scheme scheme = Scheme::nfem;
  EnrichmentKind kind = EnrichmentKind::phi_minus1_lin;
  double sigma = 0.0;  // 0: width of the outermost element layer
  CutoffSpec cutoff;
  int time_quadrature_points = 48;
  int n_elements = 50;      // 1D problems
  int boundary_nodes = 52;  // 2D problems
  std::string mesh_file;    // overrides the generated mesh
  QuadratureConfig quadrature;
  SolverConfig solver;
  unsigned random_seed = 0;  // reserved

  void validate() const;
};

struct RunResult {
  ErrorReport report;
  SolutionField field;
  std::shared_ptr<const BasisSpace> space;
  std::vector<std::string> warnings;
  bool has_exact = false;
  double sigma = 0.0;
};

Mesh scenario_mesh(const Scenario& scenario);
/// Builds the space for the scenario (sigma resolved) from a mesh.
std::shared_ptr<const BasisSpace> scenario_space(const Scenario& scenario, Mesh mesh, double* sigma_out = nullptr);

/// project_initial -> advance -> errors at T.
RunResult run_scenario(const Scenario& scenario);

// ---- convergence -----------------------------------------------------------

struct ConvergenceRow {
  Scheme scheme = Scheme::nfem;
  int level = 0;
  double epsilon = 0.0;
  double h = 0.0;
  int dofs = 0;
  double dt = 0.0;
  double final_time = 0.0;
  ErrorReport report;
  std::string error;  // non-empty when the level failed
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;  // per scheme, decreasing h
  std::vector<std::pair<Scheme, LineFit>> fits;

  std::optional<LineFit> fit(Scheme scheme) const;
  std::vector<double> errors(Scheme scheme) const;
};

/// Levels are n_elements (1D) or boundary node counts (2D). Levels run
/// concurrently (BLFEM_THREADS caps the workers); the table does not depend
/// on the thread count.
ConvergenceTable run_convergence_study(const Scenario& base, const std::vector<int>& levels,
                                       const std::vector<Scheme>& schemes = {Scheme::sfem, Scheme::nfem});

/// CSV with header scheme,epsilon,h,dofs,dt,T,rel_l2,h1_err,osc_index,runtime_s.
/// runtime_s is written as NaN unless include_runtime; failed levels carry
/// `error` in the metric columns. Lines in `preamble` are written first as
/// `# ` comments.
void write_convergence_csv(std::ostream& out, const ConvergenceTable& table, bool include_runtime,
                           const std::vector<std::string>& preamble = {});

std::string format_number(double value);

// ---- epsilon rates ---------------------------------------------------------

struct ReferenceConfig {
  int intervals = 20000;
  double dt = 1e-3;
  // Grid spacing at the boundary is sqrt(eps) / points_per_layer.
  double points_per_layer = 1000.0;
};

/// Second-order finite differences on a boundary-graded grid, Crank-Nicolson
/// in time, for the 1D problem. Returns nodal values at the requested times.
struct ReferenceSolution {
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
};
ReferenceSolution solve_reference_1d(const ProblemData& data, const std::vector<double>& sample_times,
                                     const ReferenceConfig& config = {});

/// u0 + cutoff * theta0 from both ends of the interval.
double asymptotic_approximation_1d(const ProblemData& data, const CutoffSpec& cutoff, double x, double t);

struct RateStudy {
  std::vector<double> epsilons;
  std::vector<double> l2_errors;  // max over sample times
  std::vector<double> h1_errors;
  LineFit l2_fit;
  LineFit h1_fit;
  bool degenerate = false;      // all errors vanish
  bool monotone = true;         // errors decrease with epsilon
};

/// ||u_eps - u0 - theta0_bar|| in L_inf(0,T;L2) and L_inf(0,T;H1-seminorm),
/// sampled every `sample_every` time units, against the reference solver.
RateStudy epsilon_rate_study(const std::function<ProblemData(double epsilon)>& family,
                             const std::vector<double>& epsilons, double sample_every = 0.05,
                             const ReferenceConfig& config = {});

}  // namespace blfem
