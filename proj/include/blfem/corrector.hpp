#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blfem/mesh.hpp"

namespace blfem {

enum class Geometry { interval, disk };

using SpaceTimeFn = std::function<double(double x, double y, double t)>;
using SpaceFn = std::function<double(double x, double y)>;
using TimeFn = std::function<double(double t)>;

/// One term g(t) * h(x, y) of a separable source.
struct SeparableTerm {
  TimeFn time_factor;
  SpaceFn space_factor;
};

/// Data of u_t - eps * Laplace(u) = f with homogeneous Dirichlet conditions.
/// For the interval geometry the y argument is ignored.
struct ProblemData {
  Geometry geometry = Geometry::disk;
  SpaceTimeFn f;
  // F(x, y, t) = int_0^t f ds; optional.
  SpaceTimeFn f_antiderivative;
  // Optional split f = sum_k g_k(t) h_k(x, y); lets load vectors be
  // assembled once instead of every step. Must agree with f.
  std::vector<SeparableTerm> f_terms;
  SpaceFn u0_initial;
  double epsilon = 1.0;
  double final_time = 1.0;

  /// Throws if u0 does not vanish on the boundary (sampled, 1e-10). Returns
  /// warnings for data that violate f(., 0) = 0 on the boundary.
  std::vector<std::string> check_compatibility() const;
};

/// Boundary point labelled by the fitted angle. The interval has two
/// boundary points: eta = 0 is x = 0 and eta = pi is x = 1.
Point2 boundary_point(Geometry geometry, double eta);

/// Fitted coordinates for either geometry (interval: xi is the distance to
/// the nearer end, eta is 0 or pi as in boundary_point).
FittedCoords fitted_coords(Geometry geometry, double x, double y);

/// Smooth cutoff delta(xi): 1 on [0, inner], 0 on [outer, 1], quintic
/// smoothstep in between.
struct CutoffSpec {
  double inner = 0.25;
  double outer = 0.5;

  void validate() const;
};

double cutoff_delta(const CutoffSpec& spec, double xi);
double cutoff_delta_dxi(const CutoffSpec& spec, double xi);

enum class EnrichmentKind { phi0, phi0_tilde, phi_minus1, phi_minus1_lin };

std::string to_string(EnrichmentKind kind);
EnrichmentKind enrichment_kind_from_string(const std::string& name);
bool is_time_dependent(EnrichmentKind kind);

struct EnrichmentSpec {
  EnrichmentKind kind = EnrichmentKind::phi_minus1_lin;
  double epsilon = 1.0;
  // Support width of phi_minus1_lin.
  double sigma = 0.0;
  CutoffSpec cutoff;
  int time_quadrature_points = 48;

  void validate() const;
  /// xi beyond which the profile vanishes identically.
  double support() const;
};

/// u0(x) + int_0^t f(x, s) ds.
double limit_solution(const ProblemData& data, double x, double y, double t);

/// I(xi, t) = erfc_paper(xi / sqrt(2 eps t)); continuous extension at t = 0.
double heat_kernel_I(double xi, double t, double epsilon);

/// theta0 = -int_0^t I(xi, t - s) f(boundary(eta), s) ds.
double theta0(const ProblemData& data, double eta, double xi, double t);

/// theta0 multiplied by the cutoff.
double theta0_cutoff(const ProblemData& data, const CutoffSpec& cutoff, double eta, double xi, double t);

/// Boundary-layer element profile phi(xi, t) of the selected kind.
double enrichment_profile(const EnrichmentSpec& spec, double xi, double t);

/// d phi / d xi.
double enrichment_profile_dxi(const EnrichmentSpec& spec, double xi, double t);

}  // namespace blfem
