#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "blfem/corrector.hpp"
#include "blfem/linsolve.hpp"
#include "blfem/mesh.hpp"

namespace blfem {

/// Density of the composite rules used wherever an integrand may carry a
/// boundary layer.
struct QuadratureConfig {
  // Interior triangles (no layer inside).
  int triangle_degree = 4;
  // Radial (xi) direction: sub-intervals in the uniform zone / growth zone
  // and Gauss points per sub-interval.
  int layer_subintervals = 8;
  int layer_gauss_points = 10;
  // Angular direction of polar pieces.
  int angular_subintervals = 8;
  int angular_gauss_points = 8;

  void validate() const;
  /// Same layout, twice the density in every direction (self-consistency checks).
  QuadratureConfig refined() const;
};

/// Standard P1 DOFs on interior nodes, then the enriched DOFs phi * psi_j.
///
/// 1D: two enriched DOFs, j = 0 lives at x = 0 (xi = x) and j = 1 at x = 1
/// (xi = 1 - x). 2D: one per boundary node, psi_j the periodic hat on the
/// boundary-node angles.
struct BasisSpace {
  Geometry geometry = Geometry::interval;
  Mesh mesh;
  std::vector<int> dof_of_node;  // -1 on Dirichlet nodes
  std::vector<int> node_of_dof;
  int n_standard = 0;
  std::optional<EnrichmentSpec> enrichment;
  std::vector<double> enriched_angles;  // increasing, in [0, 2 pi)

  int n_enriched() const { return static_cast<int>(enrichment ? enriched_angles.size() : 0); }
  int size() const { return n_standard + n_enriched(); }
  double h() const;
  const Mesh1D& mesh1d() const { return std::get<Mesh1D>(mesh); }
  const Mesh2D& mesh2d() const { return std::get<Mesh2D>(mesh); }
};

BasisSpace make_space(Mesh mesh, std::optional<EnrichmentSpec> enrichment = std::nullopt);

struct BasisValue {
  int dof;
  double value;
  double dx;
  double dy;
};

/// Active basis functions at (x, y) inside `cell` (element or triangle
/// index; -1 for the sliver between a boundary chord and the circle, where
/// only enriched functions live). Appends to `out` after clearing it.
void evaluate_basis(const BasisSpace& space, int cell, double x, double y, double t,
                    std::vector<BasisValue>& out);

struct QuadPoint {
  double x;
  double y;
  double w;
};

/// A region of the domain with its quadrature points. 2D pieces are whole
/// triangles (Cartesian rule or polar layer rule) or chord slivers.
struct Piece {
  int cell = -1;
  double xi_min = 0.0;
  std::vector<QuadPoint> points;
  // Extra sample locations (element vertices) for pointwise diagnostics.
  std::vector<Point2> probes;
};

/// Decomposition of the true domain ((0,1) or the unit disk) into pieces
/// with layer-resolving rules near the boundary. Pieces are generated on
/// the fly.
class IntegrationPlan {
 public:
  IntegrationPlan(const BasisSpace& space, double epsilon, QuadratureConfig config = {});

  void for_each_piece(const std::function<void(const Piece&)>& visit) const;
  /// Pieces are numbered 0..piece_count()-1; visiting one is independent of the others.
  int piece_count() const;
  void build_piece(int index, Piece& piece) const;

  const BasisSpace& space() const { return *space_; }
  double polar_width() const { return polar_width_; }

 private:
  void build_interval_piece(int element, Piece& piece) const;
  void build_triangle_piece(int triangle, Piece& piece) const;
  void build_sliver_piece(int edge, Piece& piece) const;

  const BasisSpace* space_;
  double epsilon_;
  QuadratureConfig config_;
  double layer_scale_;
  double layer_zone_;
  double polar_width_;
  std::vector<int> boundary_ring_;  // boundary nodes sorted by angle
};

struct AssembledSystem {
  SparseMatrix mass;
  // a_eps(u, v) = eps (grad u, grad v)
  SparseMatrix stiffness;
  double assembled_at = 0.0;
};

/// P1 blocks by exact element formulas (enriched DOFs, if any, left empty).
AssembledSystem assemble_standard(const BasisSpace& space, double epsilon);

/// Full enriched system with the basis evaluated at time t.
AssembledSystem assemble_enriched(const BasisSpace& space, const IntegrationPlan& plan, double epsilon, double t);

/// C_ab = (v_a(t_test), v_b(t_trial)).
SparseMatrix assemble_cross_mass(const BasisSpace& space, const IntegrationPlan& plan, double t_test,
                                 double t_trial);

/// b_a = (g, v_a(t)).
Vector assemble_load(const BasisSpace& space, const IntegrationPlan& plan, const SpaceFn& g, double t);

/// L2 projection of u0 onto the space at t = 0; returns the coefficients.
Vector project_initial(const BasisSpace& space, const IntegrationPlan& plan, const SparseMatrix& mass,
                       const SpaceFn& u0, const SolverConfig& config = {});

/// Value of the discrete field at (x, y) in `cell`.
double evaluate_field(const BasisSpace& space, const Vector& coefficients, int cell, double x, double y,
                      double t, std::vector<BasisValue>& scratch);

/// Coordinate dump: `i j value` per stored entry, 0-based, 17 digits.
void write_matrix(std::ostream& out, const SparseMatrix& matrix);

}  // namespace blfem
