#include "blfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace blfem {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void compute_quality(Mesh2D& mesh) {
  double h = 0.0;
  double min_inscribed = std::numeric_limits<double>::infinity();
  double min_angle = 180.0;
  for (const auto& tri : mesh.triangles) {
    const Point2& a = mesh.nodes[tri[0]];
    const Point2& b = mesh.nodes[tri[1]];
    const Point2& c = mesh.nodes[tri[2]];
    const double ab = distance(a, b);
    const double bc = distance(b, c);
    const double ca = distance(c, a);
    h = std::max({h, ab, bc, ca});
    const double area = triangle_signed_area(a, b, c);
    min_inscribed = std::min(min_inscribed, 4.0 * area / (ab + bc + ca));
    // law of cosines for each corner
    const double lens[3] = {bc, ca, ab};
    for (int k = 0; k < 3; ++k) {
      const double opp = lens[k];
      const double s1 = lens[(k + 1) % 3];
      const double s2 = lens[(k + 2) % 3];
      const double cosine = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
      min_angle = std::min(min_angle, std::acos(cosine) * 180.0 / std::numbers::pi);
    }
  }
  mesh.h = h;
  mesh.quality_bound = h / min_inscribed;
  mesh.min_angle_deg = min_angle;
}

// Triangulates the annulus between two node rings by sweeping both in
// increasing angle and always advancing the ring whose next node comes first.
void stitch_rings(const std::vector<int>& outer, double outer_offset,
                  const std::vector<int>& inner, double inner_offset,
                  const std::vector<Point2>& nodes,
                  std::vector<std::array<int, 3>>& triangles) {
  const int na = static_cast<int>(outer.size());
  const int nb = static_cast<int>(inner.size());
  auto angle_a = [&](int i) { return outer_offset + kTwoPi * i / na; };

  int j0 = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < nb; ++j) {
    double d = std::remainder(inner_offset + kTwoPi * j / nb - angle_a(0), kTwoPi);
    if (std::abs(d) < best) {
      best = std::abs(d);
      j0 = j;
    }
  }
  const double base = angle_a(0) + std::remainder(inner_offset + kTwoPi * j0 / nb - angle_a(0), kTwoPi);
  auto angle_b = [&](int j) { return base + kTwoPi * j / nb; };
  auto a_node = [&](int i) { return outer[i % na]; };
  auto b_node = [&](int j) { return inner[(j0 + j) % nb]; };

  auto emit = [&](int p, int q, int r) {
    if (triangle_signed_area(nodes[p], nodes[q], nodes[r]) < 0.0) std::swap(q, r);
    triangles.push_back({p, q, r});
  };

  int i = 0;
  int j = 0;
  while (i < na || j < nb) {
    if (j >= nb || (i < na && angle_a(i + 1) <= angle_b(j + 1))) {
      emit(a_node(i), a_node(i + 1), b_node(j));
      ++i;
    } else {
      emit(a_node(i), b_node(j + 1), b_node(j));
      ++j;
    }
  }
}

}  // namespace

double triangle_signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh1D build_interval_mesh(int n_elements) {
  if (n_elements < 2) {
    throw std::invalid_argument("interval mesh needs at least 2 elements");
  }
  Mesh1D mesh;
  mesh.nodes.resize(n_elements + 1);
  for (int i = 0; i <= n_elements; ++i) {
    mesh.nodes[i] = static_cast<double>(i) / n_elements;
  }
  mesh.nodes.back() = 1.0;
  for (int e = 0; e < n_elements; ++e) mesh.elements.push_back({e, e + 1});
  mesh.h = 1.0 / n_elements;
  return mesh;
}

Mesh2D build_disk_mesh(int boundary_node_count) {
  if (boundary_node_count < 8) {
    throw std::invalid_argument("disk mesh needs at least 8 boundary nodes");
  }
  const int m = boundary_node_count;
  // Interior rings use a tangential spacing 1/sqrt(2) of the boundary spacing
  // and a radial spacing of sqrt(3)/2 times that, which gives near-equilateral
  // staggered rows.
  const double tangential = kTwoPi / m / std::numbers::sqrt2;
  const double radial = tangential * std::numbers::sqrt3 / 2.0;

  Mesh2D mesh;
  std::vector<double> offsets;
  for (int k = 0;; ++k) {
    const double r = 1.0 - k * radial;
    if (r <= 1e-12) break;
    int n = m;
    if (k > 0) {
      n = static_cast<int>(std::lround(kTwoPi * r / tangential));
      if (n < 8) break;
    }
    const double offset = (k % 2 == 1) ? std::numbers::pi / n : 0.0;
    std::vector<int> ring;
    for (int i = 0; i < n; ++i) {
      ring.push_back(mesh.node_count());
      if (k == 0) {
        const double a = kTwoPi * i / n;
        mesh.nodes.push_back({std::cos(a), std::sin(a)});
      } else {
        const double a = offset + kTwoPi * i / n;
        mesh.nodes.push_back({r * std::cos(a), r * std::sin(a)});
      }
    }
    mesh.rings.push_back(std::move(ring));
    offsets.push_back(offset);
  }

  for (std::size_t k = 0; k + 1 < mesh.rings.size(); ++k) {
    stitch_rings(mesh.rings[k], offsets[k], mesh.rings[k + 1], offsets[k + 1], mesh.nodes,
                 mesh.triangles);
  }

  const int center = mesh.node_count();
  mesh.nodes.push_back({0.0, 0.0});
  const auto& last = mesh.rings.back();
  for (std::size_t i = 0; i < last.size(); ++i) {
    mesh.triangles.push_back({last[i], last[(i + 1) % last.size()], center});
  }
  mesh.rings.push_back({center});

  mesh.boundary_nodes = mesh.rings.front();
  mesh.ring_width = mesh.rings.size() > 2 ? radial : 1.0;
  compute_quality(mesh);
  return mesh;
}

FittedCoords to_fitted(double x, double y) {
  const double r = std::hypot(x, y);
  if (r > 1.0 + 1e-9) {
    throw std::domain_error("point lies outside the unit disk");
  }
  FittedCoords c;
  c.xi = std::clamp(1.0 - r, 0.0, 1.0);
  if (r == 0.0) {
    c.eta = 0.0;
    return c;
  }
  double eta = std::atan2(y, x);
  if (eta < 0.0) eta += kTwoPi;
  if (eta >= kTwoPi) eta -= kTwoPi;
  c.eta = eta;
  return c;
}

Point2 from_fitted(const FittedCoords& coords) {
  const double r = 1.0 - coords.xi;
  return {r * std::cos(coords.eta), r * std::sin(coords.eta)};
}

GradientTransform gradient_transform(const FittedCoords& coords) {
  if (coords.xi >= 1.0 - 1e-12) {
    throw std::domain_error("fitted coordinates are singular at the center");
  }
  const double c = std::cos(coords.eta);
  const double s = std::sin(coords.eta);
  const double r = 1.0 - coords.xi;
  return {-s / r, -c, c / r, -s};
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_mesh(std::ostream& out, const Mesh1D& mesh) {
  out << "blfem-mesh v1 1 " << mesh.node_count() << ' ' << mesh.element_count() << " 2\n";
  for (double x : mesh.nodes) out << "v " << format_double(x) << '\n';
  for (const auto& e : mesh.elements) out << "t " << e[0] << ' ' << e[1] << '\n';
  out << "b 0\n";
  out << "b " << mesh.node_count() - 1 << '\n';
}

void write_mesh(std::ostream& out, const Mesh2D& mesh) {
  out << "blfem-mesh v1 2 " << mesh.node_count() << ' ' << mesh.triangle_count() << ' '
      << mesh.boundary_count() << '\n';
  for (const auto& p : mesh.nodes) out << "v " << format_double(p.x) << ' ' << format_double(p.y) << '\n';
  for (const auto& t : mesh.triangles) out << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (int b : mesh.boundary_nodes) out << "b " << b << '\n';
}

Mesh read_mesh(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw std::invalid_argument("empty mesh file");

  std::istringstream header(line);
  std::string magic, version;
  int dim = 0, n_nodes = 0, n_elements = 0, n_boundary = 0;
  header >> magic >> version >> dim >> n_nodes >> n_elements >> n_boundary;
  if (!header || magic != "blfem-mesh" || version != "v1" || (dim != 1 && dim != 2)) {
    throw std::invalid_argument("bad mesh header: " + line);
  }

  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> elements;
  std::vector<int> boundary;
  while (next_line()) {
    std::istringstream ls(line);
    char tag = 0;
    ls >> tag;
    if (tag == 'v') {
      Point2 p;
      ls >> p.x;
      if (dim == 2) ls >> p.y;
      nodes.push_back(p);
    } else if (tag == 't') {
      std::array<int, 3> e{-1, -1, -1};
      ls >> e[0] >> e[1];
      if (dim == 2) ls >> e[2];
      elements.push_back(e);
    } else if (tag == 'b') {
      int b = -1;
      ls >> b;
      boundary.push_back(b);
    } else {
      throw std::invalid_argument("unknown mesh record: " + line);
    }
    if (!ls) throw std::invalid_argument("malformed mesh record: " + line);
  }
  if (static_cast<int>(nodes.size()) != n_nodes || static_cast<int>(elements.size()) != n_elements ||
      static_cast<int>(boundary.size()) != n_boundary) {
    throw std::invalid_argument("mesh record counts do not match header");
  }
  for (const auto& e : elements) {
    for (int k = 0; k < dim + 1; ++k) {
      if (e[k] < 0 || e[k] >= n_nodes) throw std::invalid_argument("element index out of range");
    }
  }

  if (dim == 1) {
    Mesh1D mesh;
    for (const auto& p : nodes) mesh.nodes.push_back(p.x);
    for (const auto& e : elements) {
      mesh.elements.push_back({e[0], e[1]});
      mesh.h = std::max(mesh.h, std::abs(nodes[e[1]].x - nodes[e[0]].x));
    }
    return mesh;
  }
  Mesh2D mesh;
  mesh.nodes = std::move(nodes);
  mesh.triangles = std::move(elements);
  mesh.boundary_nodes = std::move(boundary);
  std::vector<char> on_boundary(mesh.nodes.size(), 0);
  for (int b : mesh.boundary_nodes) on_boundary[b] = 1;
  mesh.ring_width = 1.0;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    if (!on_boundary[i]) {
      mesh.ring_width = std::min(mesh.ring_width, 1.0 - std::hypot(mesh.nodes[i].x, mesh.nodes[i].y));
    }
  }
  compute_quality(mesh);
  return mesh;
}

}  // namespace blfem
