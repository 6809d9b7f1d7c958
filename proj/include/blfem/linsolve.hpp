#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <stdexcept>
#include <string>

namespace blfem {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct SolverConfig {
  enum class Method { automatic, direct_cholesky, cg_jacobi };

  Method method = Method::automatic;
  double rel_tolerance = 1e-10;
  // 0 selects 10 * dimension.
  int max_iterations = 0;
  // automatic switches to CG above this dimension.
  int direct_limit = 50000;

  void validate() const;
};

std::string to_string(SolverConfig::Method method);
SolverConfig::Method solver_method_from_string(const std::string& name);

/// Base of all solver failures; carries the achieved relative residual.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NotPositiveDefinite : public SolverError {
 public:
  using SolverError::SolverError;
};

class NoConvergence : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Factor once, solve many. Not thread-safe; use one instance per thread.
class SpdSolver {
 public:
  explicit SpdSolver(SolverConfig config = {});
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  void factor(const SparseMatrix& matrix);
  Vector solve(const Vector& rhs);

  /// Relative residual of the last solve.
  double last_residual() const { return last_residual_; }
  /// max/min diagonal entry of the Cholesky factor; NaN for CG.
  double condition_proxy() const { return condition_proxy_; }
  int last_iterations() const { return last_iterations_; }
  bool uses_direct() const { return direct_; }

 private:
  struct Impl;
  SolverConfig config_;
  std::unique_ptr<Impl> impl_;
  bool direct_ = true;
  double last_residual_ = 0.0;
  double condition_proxy_ = 0.0;
  int last_iterations_ = 0;
};

Vector solve_spd(const SparseMatrix& matrix, const Vector& rhs, const SolverConfig& config = {});

}  // namespace blfem
