#include "blfem/linsolve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>

namespace blfem {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;

double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b) {
  const double bn = b.norm();
  if (bn == 0.0) return (a * x).norm();
  return (a * x - b).norm() / bn;
}

void check_symmetric(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("solver needs a square matrix");
  const SparseMatrix diff = a - SparseMatrix(a.transpose());
  double scale = 0.0;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
      if (std::abs(it.value()) > 1e-12 * scale) throw std::invalid_argument("solver needs a symmetric matrix");
    }
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(rel_tolerance > 0.0 && rel_tolerance <= 1e-4)) {
    throw std::invalid_argument("rel_tolerance must lie in (0, 1e-4]");
  }
  if (max_iterations < 0) throw std::invalid_argument("max_iterations must be non-negative");
  if (direct_limit < 1) throw std::invalid_argument("direct_limit must be positive");
}

std::string to_string(SolverConfig::Method method) {
  switch (method) {
    case SolverConfig::Method::automatic: return "auto";
    case SolverConfig::Method::direct_cholesky: return "direct";
    case SolverConfig::Method::cg_jacobi: return "cg";
  }
  return "unknown";
}

SolverConfig::Method solver_method_from_string(const std::string& name) {
  if (name == "auto") return SolverConfig::Method::automatic;
  if (name == "direct" || name == "direct_cholesky") return SolverConfig::Method::direct_cholesky;
  if (name == "cg" || name == "cg_jacobi") return SolverConfig::Method::cg_jacobi;
  throw std::invalid_argument("unknown solver method: " + name);
}

struct SpdSolver::Impl {
  SparseMatrix matrix;
  Eigen::SimplicialLLT<ColMatrix> llt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
};

SpdSolver::SpdSolver(SolverConfig config) : config_(config), impl_(std::make_unique<Impl>()) { config_.validate(); }
SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

void SpdSolver::factor(const SparseMatrix& matrix) {
  check_symmetric(matrix);
  impl_->matrix = matrix;
  const int n = static_cast<int>(matrix.rows());
  switch (config_.method) {
    case SolverConfig::Method::direct_cholesky: direct_ = true; break;
    case SolverConfig::Method::cg_jacobi: direct_ = false; break;
    case SolverConfig::Method::automatic: direct_ = n <= config_.direct_limit; break;
  }
  if (direct_) {
    impl_->llt.compute(ColMatrix(matrix));
    if (impl_->llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("Cholesky factorization hit a non-positive pivot",
                                std::numeric_limits<double>::quiet_NaN());
    }
    const Vector d = ColMatrix(impl_->llt.matrixL()).diagonal();
    if (d.size() > 0) {
      if (!(d.minCoeff() > 0.0)) {
        throw NotPositiveDefinite("Cholesky factor has a non-positive diagonal entry",
                                  std::numeric_limits<double>::quiet_NaN());
      }
      condition_proxy_ = d.maxCoeff() / d.minCoeff();
    } else {
      condition_proxy_ = 1.0;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      if (!(matrix.coeff(i, i) > 0.0)) {
        throw NotPositiveDefinite("non-positive diagonal entry " + std::to_string(i),
                                  std::numeric_limits<double>::quiet_NaN());
      }
    }
    impl_->cg.setTolerance(config_.rel_tolerance);
    impl_->cg.setMaxIterations(config_.max_iterations > 0 ? config_.max_iterations : 10 * std::max(n, 1));
    impl_->cg.compute(impl_->matrix);
    condition_proxy_ = std::numeric_limits<double>::quiet_NaN();
  }
}

Vector SpdSolver::solve(const Vector& rhs) {
  const SparseMatrix& a = impl_->matrix;
  if (rhs.size() != a.rows()) throw std::invalid_argument("right-hand side has the wrong dimension");
  if (rhs.squaredNorm() == 0.0) {
    last_residual_ = 0.0;
    last_iterations_ = 0;
    return Vector::Zero(rhs.size());
  }
  if (direct_) {
    Vector x = impl_->llt.solve(rhs);
    last_residual_ = relative_residual(a, x, rhs);
    // a few steps of iterative refinement recover accuracy lost to poor
    // conditioning of the enriched blocks
    for (int k = 0; k < 3 && last_residual_ > config_.rel_tolerance; ++k) {
      x += impl_->llt.solve(rhs - a * x);
      last_residual_ = relative_residual(a, x, rhs);
    }
    last_iterations_ = 0;
    if (!std::isfinite(last_residual_)) throw NotPositiveDefinite("direct solve produced non-finite values", last_residual_);
    return x;
  }
  Vector x = impl_->cg.solve(rhs);
  last_iterations_ = static_cast<int>(impl_->cg.iterations());
  last_residual_ = relative_residual(a, x, rhs);
  if (impl_->cg.info() != Eigen::Success || !(last_residual_ <= 10.0 * config_.rel_tolerance)) {
    throw NoConvergence("conjugate gradients did not converge in " + std::to_string(last_iterations_) +
                            " iterations",
                        last_residual_);
  }
  return x;
}

Vector solve_spd(const SparseMatrix& matrix, const Vector& rhs, const SolverConfig& config) {
  SpdSolver solver(config);
  solver.factor(matrix);
  return solver.solve(rhs);
}

}  // namespace blfem
