#include "blfem/timestep.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace blfem {

TimeGrid TimeGrid::make(double final_time, double dt) {
  if (!(final_time > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
  const double ratio = final_time / dt;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("T / dt = " + std::to_string(ratio) + " is not an integer step count");
  }
  TimeGrid grid;
  grid.final_time = final_time;
  grid.n_steps = static_cast<int>(n);
  grid.dt = final_time / grid.n_steps;
  return grid;
}

GalerkinSupplier::GalerkinSupplier(std::shared_ptr<const BasisSpace> space, ProblemData data,
                                   QuadratureConfig quadrature)
    : space_(std::move(space)), data_(std::move(data)), plan_(*space_, data_.epsilon, quadrature) {}

bool GalerkinSupplier::time_dependent() const {
  return space_->enrichment && is_time_dependent(space_->enrichment->kind);
}

AssembledSystem GalerkinSupplier::assemble(double t) const {
  if (space_->enrichment) return assemble_enriched(*space_, plan_, data_.epsilon, t);
  return assemble_standard(*space_, data_.epsilon);
}

StepOperators GalerkinSupplier::operators(double t_new, double t_old) {
  AssembledSystem sys = assemble(t_new);
  StepOperators ops;
  ops.cross_mass = time_dependent() ? assemble_cross_mass(*space_, plan_, t_new, t_old) : sys.mass;
  ops.mass = std::move(sys.mass);
  ops.stiffness = std::move(sys.stiffness);
  return ops;
}

Vector GalerkinSupplier::load(double t) {
  if (!data_.f) return Vector::Zero(size());
  if (!data_.f_terms.empty() && !time_dependent()) {
    if (term_loads_.empty()) {
      for (const auto& term : data_.f_terms) term_loads_.push_back(assemble_load(*space_, plan_, term.space_factor, 0.0));
    }
    Vector b = Vector::Zero(size());
    for (std::size_t k = 0; k < term_loads_.size(); ++k) b += data_.f_terms[k].time_factor(t) * term_loads_[k];
    return b;
  }
  const auto& f = data_.f;
  return assemble_load(*space_, plan_, [&](double x, double y) { return f(x, y, t); }, t);
}

Vector GalerkinSupplier::initial_coefficients(const SolverConfig& config) {
  if (!data_.u0_initial) return Vector::Zero(size());
  const AssembledSystem sys = assemble(0.0);
  return project_initial(*space_, plan_, sys.mass, data_.u0_initial, config);
}

SolutionField advance(SystemSupplier& supplier, const TimeGrid& grid, const Vector& initial,
                      const SolverConfig& config, bool keep_history) {
  if (initial.size() != supplier.size()) throw std::invalid_argument("initial vector has the wrong dimension");
  SolutionField field;
  field.times.push_back(0.0);
  field.coefficients.push_back(initial);
  field.condition_proxy = 0.0;

  SpdSolver solver(config);
  StepOperators ops;
  SparseMatrix lhs;
  const double dt = grid.dt;
  Vector u = initial;
  for (int n = 0; n < grid.n_steps; ++n) {
    const double t_old = grid.time(n);
    const double t_new = grid.time(n + 1);
    try {
      if (n == 0 || supplier.time_dependent()) {
        ops = supplier.operators(t_new, t_old);
        lhs = ops.mass + dt * ops.stiffness;
        solver.factor(lhs);
        field.condition_proxy = std::max(field.condition_proxy, solver.condition_proxy());
      }
      const Vector rhs = ops.cross_mass * u + dt * supplier.load(t_new);
      u = solver.solve(rhs);
    } catch (const SolverError& e) {
      throw StepFailure(std::string(e.what()) + " at step " + std::to_string(n + 1), e.residual(), n + 1);
    }
    if (keep_history || n + 1 == grid.n_steps) {
      field.times.push_back(t_new);
      field.coefficients.push_back(u);
    }
  }
  return field;
}

}  // namespace blfem
