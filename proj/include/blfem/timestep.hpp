#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "blfem/assembly.hpp"
#include "blfem/linsolve.hpp"

namespace blfem {

/// Uniform grid on [0, T] with an integral number of steps.
struct TimeGrid {
  double final_time = 1.0;
  double dt = 0.01;
  int n_steps = 100;

  /// Throws std::invalid_argument unless T / dt is an integer (to 1e-9).
  static TimeGrid make(double final_time, double dt);
  double time(int step) const { return final_time * step / n_steps; }
};

/// Operators of one implicit Euler step from t_old to t_new.
struct StepOperators {
  SparseMatrix mass;        // basis at t_new against itself
  SparseMatrix stiffness;   // at t_new
  SparseMatrix cross_mass;  // test basis at t_new, trial basis at t_old
};

/// Supplies the discrete operators; time-independent suppliers are queried once.
class SystemSupplier {
 public:
  virtual ~SystemSupplier() = default;
  virtual int size() const = 0;
  virtual bool time_dependent() const = 0;
  virtual StepOperators operators(double t_new, double t_old) = 0;
  virtual Vector load(double t) = 0;
};

/// Galerkin system of a (possibly enriched) space for given problem data.
class GalerkinSupplier : public SystemSupplier {
 public:
  GalerkinSupplier(std::shared_ptr<const BasisSpace> space, ProblemData data, QuadratureConfig quadrature = {});

  int size() const override { return space_->size(); }
  bool time_dependent() const override;
  StepOperators operators(double t_new, double t_old) override;
  Vector load(double t) override;

  /// Mass matrix at t = 0 and the L2 projection of u0 onto the space.
  Vector initial_coefficients(const SolverConfig& config);
  const IntegrationPlan& plan() const { return plan_; }
  const BasisSpace& space() const { return *space_; }

 private:
  AssembledSystem assemble(double t) const;

  std::shared_ptr<const BasisSpace> space_;
  ProblemData data_;
  IntegrationPlan plan_;
  std::vector<Vector> term_loads_;  // one per separable source term (static bases)
};

struct SolutionField {
  std::shared_ptr<const BasisSpace> space;
  std::vector<double> times;
  std::vector<Vector> coefficients;
  // Largest Cholesky-diagonal ratio seen (NaN when not available).
  double condition_proxy = 0.0;

  const Vector& final_coefficients() const { return coefficients.back(); }
};

/// Raised when a step's linear solve fails; names the step.
class StepFailure : public SolverError {
 public:
  StepFailure(const std::string& what, double residual, int step) : SolverError(what, residual), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Implicit Euler:
///   static basis:   (M + dt A) U^{n+1} = M U^n + dt F(t_{n+1})
///   moving basis:   (M^{n+1} + dt A^{n+1}) U^{n+1} = C^{n+1,n} U^n + dt F(t_{n+1})
/// `keep_history` false stores only the initial and final vectors.
SolutionField advance(SystemSupplier& supplier, const TimeGrid& grid, const Vector& initial,
                      const SolverConfig& config = {}, bool keep_history = true);

}  // namespace blfem
