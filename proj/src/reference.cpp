// Finite-difference reference solver for the 1D problem, used as an
// independent oracle for the asymptotic expansion.
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

#include "blfem/analysis.hpp"

namespace blfem {

namespace {

// Nodes of a grid with density 1 + K (e^{-x/L} + e^{-(1-x)/L}); K chosen so the
// spacing at both ends is about `boundary_spacing`.
std::vector<double> graded_grid(int intervals, double boundary_spacing, double layer) {
  const double a = 1.0 - std::exp(-1.0 / layer);
  const double b = 1.0 + std::exp(-1.0 / layer);
  const double nd = intervals * boundary_spacing;
  double k = 0.0;
  if (nd < 1.0) {
    const double denom = 2.0 * layer * a - nd * b;
    k = denom < 0.0 ? (nd - 1.0) / denom : 0.0;
    if (!(k > 0.0)) {
      throw std::invalid_argument("reference grid cannot reach the requested boundary spacing; raise intervals");
    }
  }
  auto g = [&](double x) {
    return x + k * layer * ((1.0 - std::exp(-x / layer)) + (std::exp(-(1.0 - x) / layer) - std::exp(-1.0 / layer)));
  };
  const double total = g(1.0);
  std::vector<double> x(intervals + 1);
  x[0] = 0.0;
  x[intervals] = 1.0;
  for (int i = 1; i < intervals; ++i) {
    const double target = total * i / intervals;
    double lo = x[i - 1];
    double hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < target ? lo : hi) = mid;
    }
    x[i] = 0.5 * (lo + hi);
  }
  return x;
}

}  // namespace

ReferenceSolution solve_reference_1d(const ProblemData& data, const std::vector<double>& sample_times,
                                     const ReferenceConfig& config) {
  if (data.geometry != Geometry::interval) throw std::invalid_argument("reference solver is 1D only");
  if (!(config.dt > 0.0) || config.intervals < 4 || !(config.points_per_layer > 0.0)) {
    throw std::invalid_argument("bad reference solver configuration");
  }
  const double eps = data.epsilon;
  ReferenceSolution ref;
  ref.x = graded_grid(config.intervals, std::sqrt(eps) / config.points_per_layer, 5.0 * std::sqrt(eps));
  ref.times = sample_times;
  const int n = config.intervals;
  const int m = n - 1;  // interior unknowns
  const auto& x = ref.x;

  double t_end = 0.0;
  for (double t : sample_times) t_end = std::max(t_end, t);
  const int steps = static_cast<int>(std::llround(t_end / config.dt));
  std::vector<int> sample_step(sample_times.size());
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    const double s = sample_times[k] / config.dt;
    sample_step[k] = static_cast<int>(std::llround(s));
    if (std::abs(s - sample_step[k]) > 1e-6) throw std::invalid_argument("sample times must be multiples of dt");
  }
  const double dt = config.dt;

  // eps * L as a tridiagonal operator on the interior nodes
  std::vector<Eigen::Triplet<double>> lhs_t, rhs_t;
  for (int i = 1; i <= m; ++i) {
    const double hl = x[i] - x[i - 1];
    const double hr = x[i + 1] - x[i];
    const double cl = eps * 2.0 / (hl * (hl + hr));
    const double cr = eps * 2.0 / (hr * (hl + hr));
    const double cc = -(cl + cr);
    const int r = i - 1;
    lhs_t.emplace_back(r, r, 1.0 - 0.5 * dt * cc);
    rhs_t.emplace_back(r, r, 1.0 + 0.5 * dt * cc);
    if (i > 1) {
      lhs_t.emplace_back(r, r - 1, -0.5 * dt * cl);
      rhs_t.emplace_back(r, r - 1, 0.5 * dt * cl);
    }
    if (i < m) {
      lhs_t.emplace_back(r, r + 1, -0.5 * dt * cr);
      rhs_t.emplace_back(r, r + 1, 0.5 * dt * cr);
    }
  }
  Eigen::SparseMatrix<double> lhs(m, m), rhs(m, m);
  lhs.setFromTriplets(lhs_t.begin(), lhs_t.end());
  rhs.setFromTriplets(rhs_t.begin(), rhs_t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(lhs);
  if (lu.info() != Eigen::Success) throw std::runtime_error("reference solver factorization failed");

  Eigen::VectorXd u(m), f_old(m), f_new(m);
  for (int i = 0; i < m; ++i) {
    u[i] = data.u0_initial ? data.u0_initial(x[i + 1], 0.0) : 0.0;
    f_old[i] = data.f ? data.f(x[i + 1], 0.0, 0.0) : 0.0;
  }
  ref.values.assign(sample_times.size(), std::vector<double>(n + 1, 0.0));
  auto record = [&](int step) {
    for (std::size_t k = 0; k < sample_step.size(); ++k) {
      if (sample_step[k] == step) {
        for (int i = 0; i < m; ++i) ref.values[k][i + 1] = u[i];
      }
    }
  };
  record(0);
  for (int s = 1; s <= steps; ++s) {
    const double t = dt * s;
    for (int i = 0; i < m; ++i) f_new[i] = data.f ? data.f(x[i + 1], 0.0, t) : 0.0;
    const Eigen::VectorXd b = rhs * u + 0.5 * dt * (f_old + f_new);
    u = lu.solve(b);
    f_old.swap(f_new);
    record(s);
  }
  return ref;
}

}  // namespace blfem
