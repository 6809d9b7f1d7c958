#include "blfem/corrector.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "blfem/quadrature.hpp"
#include "blfem/specfun.hpp"

namespace blfem {

namespace {

constexpr double kCompatibilityTol = 1e-10;

std::vector<Point2> boundary_samples(Geometry geometry) {
  if (geometry == Geometry::interval) return {{0.0, 0.0}, {1.0, 0.0}};
  std::vector<Point2> pts;
  for (int k = 0; k < 64; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 64.0;
    pts.push_back({std::cos(a), std::sin(a)});
  }
  return pts;
}

// 1 - exp(-a) without cancellation for small a.
double one_minus_exp(double a) { return -std::expm1(-a); }

// int_0^t I(xi, tau) dtau and its xi-derivative, using tau = t u^2 so the
// 1/sqrt(tau) behaviour of dI/dxi at xi = 0 becomes a smooth integrand.
double integrated_kernel(double xi, double t, double epsilon, int n_points) {
  if (t <= 0.0) return 0.0;
  const IntervalRule g = gauss_interval(n_points);
  double sum = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double u = g.points[k];
    sum += g.weights[k] * heat_kernel_I(xi, t * u * u, epsilon) * 2.0 * t * u;
  }
  return sum;
}

double integrated_kernel_dxi(double xi, double t, double epsilon, int n_points) {
  if (t <= 0.0) return 0.0;
  const IntervalRule g = gauss_interval(n_points);
  double sum = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double u = g.points[k];
    sum += g.weights[k] * std::exp(-xi * xi / (4.0 * epsilon * t * u * u));
  }
  return -2.0 * std::sqrt(t / (std::numbers::pi * epsilon)) * sum;
}

}  // namespace

std::vector<std::string> ProblemData::check_compatibility() const {
  std::vector<std::string> warnings;
  for (const Point2& p : boundary_samples(geometry)) {
    if (u0_initial) {
      const double v = u0_initial(p.x, p.y);
      if (std::abs(v) > kCompatibilityTol) {
        throw std::invalid_argument("initial condition does not vanish on the boundary (value " +
                                    std::to_string(v) + ")");
      }
    }
  }
  if (f) {
    double worst = 0.0;
    for (const Point2& p : boundary_samples(geometry)) worst = std::max(worst, std::abs(f(p.x, p.y, 0.0)));
    if (worst > kCompatibilityTol) {
      warnings.push_back("source does not vanish on the boundary at t = 0 (max |f| = " +
                         std::to_string(worst) + "); corrector bounds assume it does");
    }
  }
  return warnings;
}

Point2 boundary_point(Geometry geometry, double eta) {
  if (geometry == Geometry::interval) {
    return {eta < 0.5 * std::numbers::pi ? 0.0 : 1.0, 0.0};
  }
  return {std::cos(eta), std::sin(eta)};
}

FittedCoords fitted_coords(Geometry geometry, double x, double y) {
  if (geometry == Geometry::interval) {
    if (x <= 0.5) return {0.0, std::max(x, 0.0)};
    return {std::numbers::pi, std::max(1.0 - x, 0.0)};
  }
  return to_fitted(x, y);
}

void CutoffSpec::validate() const {
  if (!(inner > 0.0 && inner < outer && outer <= 1.0)) {
    throw std::invalid_argument("cutoff needs 0 < inner < outer <= 1");
  }
}

double cutoff_delta(const CutoffSpec& spec, double xi) {
  if (xi <= spec.inner) return 1.0;
  if (xi >= spec.outer) return 0.0;
  const double s = (xi - spec.inner) / (spec.outer - spec.inner);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double cutoff_delta_dxi(const CutoffSpec& spec, double xi) {
  if (xi <= spec.inner || xi >= spec.outer) return 0.0;
  const double width = spec.outer - spec.inner;
  const double s = (xi - spec.inner) / width;
  return -30.0 * s * s * (1.0 - s) * (1.0 - s) / width;
}

std::string to_string(EnrichmentKind kind) {
  switch (kind) {
    case EnrichmentKind::phi0: return "phi0";
    case EnrichmentKind::phi0_tilde: return "phi0_tilde";
    case EnrichmentKind::phi_minus1: return "phi_m1";
    case EnrichmentKind::phi_minus1_lin: return "phi_m1_lin";
  }
  return "unknown";
}

EnrichmentKind enrichment_kind_from_string(const std::string& name) {
  if (name == "phi0") return EnrichmentKind::phi0;
  if (name == "phi0_tilde") return EnrichmentKind::phi0_tilde;
  if (name == "phi_m1" || name == "phi_minus1") return EnrichmentKind::phi_minus1;
  if (name == "phi_m1_lin" || name == "phi_minus1_lin") return EnrichmentKind::phi_minus1_lin;
  throw std::invalid_argument("unknown enrichment kind: " + name);
}

bool is_time_dependent(EnrichmentKind kind) {
  return kind == EnrichmentKind::phi0 || kind == EnrichmentKind::phi0_tilde;
}

void EnrichmentSpec::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("enrichment epsilon must be positive");
  cutoff.validate();
  if (kind == EnrichmentKind::phi_minus1_lin && !(sigma > 0.0 && sigma <= cutoff.outer)) {
    throw std::invalid_argument("phi_m1_lin needs 0 < sigma <= cutoff.outer");
  }
  if (time_quadrature_points < 1 || time_quadrature_points > 64) {
    throw std::invalid_argument("time_quadrature_points must be in [1, 64]");
  }
}

double EnrichmentSpec::support() const {
  return kind == EnrichmentKind::phi_minus1_lin ? sigma : cutoff.outer;
}

double limit_solution(const ProblemData& data, double x, double y, double t) {
  double value = data.u0_initial ? data.u0_initial(x, y) : 0.0;
  if (t <= 0.0) return value;
  if (data.f_antiderivative) return value + data.f_antiderivative(x, y, t);
  if (data.f) {
    value += integrate_adaptive([&](double s) { return data.f(x, y, s); }, 0.0, t, 1e-12);
  }
  return value;
}

double heat_kernel_I(double xi, double t, double epsilon) {
  if (t <= 0.0) return xi > 0.0 ? 0.0 : 1.0;
  return erfc_paper(xi / std::sqrt(2.0 * epsilon * t));
}

double theta0(const ProblemData& data, double eta, double xi, double t) {
  if (t <= 0.0 || !data.f) return 0.0;
  const Point2 b = boundary_point(data.geometry, eta);
  const double eps = data.epsilon;
  auto integrand = [&](double s) { return heat_kernel_I(xi, t - s, eps) * data.f(b.x, b.y, s); };
  // The kernel switches on where its erfc argument xi / sqrt(2 eps (t - s))
  // is O(1); seed the bisection there.
  std::vector<double> breaks;
  if (xi > 0.0) {
    for (double z : {8.0, 4.0, 2.0, 1.0, 0.5}) {
      const double lag = xi * xi / (2.0 * eps * z * z);
      if (lag < t) breaks.push_back(t - lag);
    }
  }
  return -integrate_adaptive(integrand, 0.0, t, 1e-10, breaks);
}

double theta0_cutoff(const ProblemData& data, const CutoffSpec& cutoff, double eta, double xi, double t) {
  const double d = cutoff_delta(cutoff, xi);
  if (d == 0.0) return 0.0;
  return d * theta0(data, eta, xi, t);
}

double enrichment_profile(const EnrichmentSpec& spec, double xi, double t) {
  const double eps = spec.epsilon;
  switch (spec.kind) {
    case EnrichmentKind::phi0: {
      const double d = cutoff_delta(spec.cutoff, xi);
      if (d == 0.0) return 0.0;
      return (1.0 - integrated_kernel(xi, t, eps, spec.time_quadrature_points)) * d;
    }
    case EnrichmentKind::phi0_tilde: {
      const double d = cutoff_delta(spec.cutoff, xi);
      if (t <= 0.0) return xi > 0.0 ? d : 0.0;
      return one_minus_exp(xi * xi / (4.0 * eps * t)) * d;
    }
    case EnrichmentKind::phi_minus1:
      return one_minus_exp(xi * xi / (4.0 * eps)) * cutoff_delta(spec.cutoff, xi);
    case EnrichmentKind::phi_minus1_lin: {
      const double sigma = spec.sigma;
      if (xi > sigma) return 0.0;
      return one_minus_exp(xi * xi / (4.0 * eps)) - one_minus_exp(sigma * sigma / (4.0 * eps)) * xi / sigma;
    }
  }
  throw std::invalid_argument("unknown enrichment kind");
}

double enrichment_profile_dxi(const EnrichmentSpec& spec, double xi, double t) {
  const double eps = spec.epsilon;
  switch (spec.kind) {
    case EnrichmentKind::phi0: {
      if (xi >= spec.cutoff.outer) return 0.0;
      const int n = spec.time_quadrature_points;
      const double j = integrated_kernel(xi, t, eps, n);
      const double dj = integrated_kernel_dxi(xi, t, eps, n);
      return -dj * cutoff_delta(spec.cutoff, xi) + (1.0 - j) * cutoff_delta_dxi(spec.cutoff, xi);
    }
    case EnrichmentKind::phi0_tilde: {
      if (xi >= spec.cutoff.outer) return 0.0;
      if (t <= 0.0) return xi > 0.0 ? cutoff_delta_dxi(spec.cutoff, xi) : 0.0;
      const double a = xi * xi / (4.0 * eps * t);
      return xi / (2.0 * eps * t) * std::exp(-a) * cutoff_delta(spec.cutoff, xi) +
             one_minus_exp(a) * cutoff_delta_dxi(spec.cutoff, xi);
    }
    case EnrichmentKind::phi_minus1: {
      if (xi >= spec.cutoff.outer) return 0.0;
      const double a = xi * xi / (4.0 * eps);
      return xi / (2.0 * eps) * std::exp(-a) * cutoff_delta(spec.cutoff, xi) +
             one_minus_exp(a) * cutoff_delta_dxi(spec.cutoff, xi);
    }
    case EnrichmentKind::phi_minus1_lin: {
      const double sigma = spec.sigma;
      if (xi >= sigma) return 0.0;
      return xi / (2.0 * eps) * std::exp(-xi * xi / (4.0 * eps)) -
             one_minus_exp(sigma * sigma / (4.0 * eps)) / sigma;
    }
  }
  throw std::invalid_argument("unknown enrichment kind");
}

}  // namespace blfem
