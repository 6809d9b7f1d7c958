#pragma once

#include <array>
#include <iosfwd>
#include <variant>
#include <vector>

namespace blfem {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform partition of [0, 1].
struct Mesh1D {
  std::vector<double> nodes;
  std::vector<std::array<int, 2>> elements;
  double h = 0.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
};

/// Ring-structured triangulation of the unit disk.
///
/// Ring 0 is the boundary (nodes exactly on the unit circle, node 0 at angle
/// zero, counter-clockwise order); deeper rings follow inward and the last
/// node is the center. Triangles are counter-clockwise.
struct Mesh2D {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> boundary_nodes;
  std::vector<std::vector<int>> rings;
  double h = 0.0;
  // Radial width of the outermost element ring.
  double ring_width = 0.0;
  // max triangle diameter / min inscribed-circle diameter.
  double quality_bound = 0.0;
  double min_angle_deg = 0.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int boundary_count() const { return static_cast<int>(boundary_nodes.size()); }
};

using Mesh = std::variant<Mesh1D, Mesh2D>;

/// Boundary-fitted coordinates on the unit disk: eta is the polar angle in
/// [0, 2 pi), xi = 1 - r is the distance to the boundary.
struct FittedCoords {
  double eta = 0.0;
  double xi = 0.0;
};

/// Maps fitted-coordinate derivatives (d/deta, d/dxi) to Cartesian ones:
///   d/dx = dx_deta * d/deta + dx_dxi * d/dxi
///   d/dy = dy_deta * d/deta + dy_dxi * d/dxi
struct GradientTransform {
  double dx_deta = 0.0;
  double dx_dxi = 0.0;
  double dy_deta = 0.0;
  double dy_dxi = 0.0;

  Point2 apply(double d_deta, double d_dxi) const {
    return {dx_deta * d_deta + dx_dxi * d_dxi, dy_deta * d_deta + dy_dxi * d_dxi};
  }
};

Mesh1D build_interval_mesh(int n_elements);
Mesh2D build_disk_mesh(int boundary_node_count);

FittedCoords to_fitted(double x, double y);
Point2 from_fitted(const FittedCoords& coords);
GradientTransform gradient_transform(const FittedCoords& coords);

double triangle_signed_area(const Point2& a, const Point2& b, const Point2& c);

// Text format "blfem-mesh v1". Lines starting with '#' are comments.
void write_mesh(std::ostream& out, const Mesh1D& mesh);
void write_mesh(std::ostream& out, const Mesh2D& mesh);
Mesh read_mesh(std::istream& in);

}  // namespace blfem
