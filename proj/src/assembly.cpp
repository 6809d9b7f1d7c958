#include "blfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "blfem/parallel.hpp"
#include "blfem/quadrature.hpp"

namespace blfem {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Pieces are processed in this many fixed chunks so that accumulation order,
// and hence every bit of the result, does not depend on the thread count.
constexpr int kChunks = 64;

using Triplet = Eigen::Triplet<double>;

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

bool is_boundary_1d(const Mesh1D& mesh, int node) {
  return node == 0 || node == mesh.node_count() - 1;
}

// Intersections of the ray from the origin at angle theta with the segment
// p -> q; returns the ray parameter r or a negative value.
double ray_segment(double c, double s, const Point2& p, const Point2& q) {
  const double ex = q.x - p.x;
  const double ey = q.y - p.y;
  const double denom = cross(c, s, ex, ey);
  if (std::abs(denom) < 1e-300) return -1.0;
  const double r = cross(p.x, p.y, ex, ey) / denom;
  const double u = cross(p.x, p.y, c, s) / denom;
  if (u < -1e-9 || u > 1.0 + 1e-9 || r < 0.0) return -1.0;
  return r;
}

struct RadialRange {
  double r_in;
  double r_out;
};

RadialRange ray_triangle(double theta, const Point2 (&v)[3]) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  double lo = 1e300;
  double hi = -1e300;
  for (int k = 0; k < 3; ++k) {
    const double r = ray_segment(c, s, v[k], v[(k + 1) % 3]);
    if (r >= 0.0) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  if (hi < lo) return {0.0, 0.0};
  return {lo, std::min(hi, 1.0)};
}

template <class Body>
void for_chunks(int n_pieces, int n_chunks, Body&& body) {
  parallel_for(n_chunks, [&](int chunk) {
    const int begin = static_cast<int>(static_cast<long long>(n_pieces) * chunk / n_chunks);
    const int end = static_cast<int>(static_cast<long long>(n_pieces) * (chunk + 1) / n_chunks);
    body(chunk, begin, end);
  });
}

// Small dense accumulator keyed by global DOF.
struct LocalBlock {
  std::vector<int> dofs;
  std::vector<double> values;  // row-major dofs.size()^2

  int slot(int dof) {
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (dofs[i] == dof) return static_cast<int>(i);
    }
    const std::size_t n = dofs.size();
    std::vector<double> grown((n + 1) * (n + 1), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) grown[i * (n + 1) + j] = values[i * n + j];
    }
    values.swap(grown);
    dofs.push_back(dof);
    return static_cast<int>(n);
  }
  double& at(int i, int j) { return values[i * dofs.size() + j]; }
  void clear() {
    dofs.clear();
    values.clear();
  }
};

void exact_p1_blocks(const BasisSpace& space, double epsilon, std::vector<Triplet>& mass,
                     std::vector<Triplet>& stiff) {
  auto push = [](std::vector<Triplet>& out, int a, int b, double v) {
    out.emplace_back(a, b, v);
    if (a != b) out.emplace_back(b, a, v);
  };
  if (space.geometry == Geometry::interval) {
    const Mesh1D& mesh = space.mesh1d();
    for (const auto& e : mesh.elements) {
      const double len = mesh.nodes[e[1]] - mesh.nodes[e[0]];
      if (!(len > 0.0)) throw std::invalid_argument("degenerate interval element");
      const double m[2][2] = {{len / 3.0, len / 6.0}, {len / 6.0, len / 3.0}};
      const double k[2][2] = {{epsilon / len, -epsilon / len}, {-epsilon / len, epsilon / len}};
      for (int i = 0; i < 2; ++i) {
        const int a = space.dof_of_node[e[i]];
        if (a < 0) continue;
        for (int j = i; j < 2; ++j) {
          const int b = space.dof_of_node[e[j]];
          if (b < 0) continue;
          push(mass, a, b, m[i][j]);
          push(stiff, a, b, k[i][j]);
        }
      }
    }
    return;
  }
  const Mesh2D& mesh = space.mesh2d();
  for (const auto& tri : mesh.triangles) {
    const Point2& p0 = mesh.nodes[tri[0]];
    const Point2& p1 = mesh.nodes[tri[1]];
    const Point2& p2 = mesh.nodes[tri[2]];
    const double area = triangle_signed_area(p0, p1, p2);
    if (!(area > 1e-14 * mesh.h * mesh.h)) throw std::invalid_argument("degenerate or inverted triangle");
    // gradients of the barycentric coordinates
    const double gx[3] = {(p1.y - p2.y) / (2 * area), (p2.y - p0.y) / (2 * area), (p0.y - p1.y) / (2 * area)};
    const double gy[3] = {(p2.x - p1.x) / (2 * area), (p0.x - p2.x) / (2 * area), (p1.x - p0.x) / (2 * area)};
    for (int i = 0; i < 3; ++i) {
      const int a = space.dof_of_node[tri[i]];
      if (a < 0) continue;
      for (int j = i; j < 3; ++j) {
        const int b = space.dof_of_node[tri[j]];
        if (b < 0) continue;
        push(mass, a, b, area / 12.0 * (i == j ? 2.0 : 1.0));
        push(stiff, a, b, epsilon * area * (gx[i] * gx[j] + gy[i] * gy[j]));
      }
    }
  }
}

SparseMatrix from_triplets(int n, const std::vector<Triplet>& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

void QuadratureConfig::validate() const {
  if (triangle_degree < 1 || triangle_degree > 10) throw std::invalid_argument("triangle_degree must be in [1, 10]");
  if (layer_subintervals < 2) throw std::invalid_argument("layer_subintervals must be >= 2");
  if (angular_subintervals < 1) throw std::invalid_argument("angular_subintervals must be >= 1");
  if (layer_gauss_points < 1 || layer_gauss_points > 32 || angular_gauss_points < 1 || angular_gauss_points > 32) {
    throw std::invalid_argument("Gauss point counts must be in [1, 32]");
  }
}

QuadratureConfig QuadratureConfig::refined() const {
  QuadratureConfig q = *this;
  q.triangle_degree = std::min(10, 2 * triangle_degree);
  q.layer_subintervals *= 2;
  q.layer_gauss_points = std::min(32, 2 * layer_gauss_points);
  q.angular_subintervals *= 2;
  q.angular_gauss_points = std::min(32, 2 * angular_gauss_points);
  return q;
}

double BasisSpace::h() const {
  return std::visit([](const auto& m) { return m.h; }, mesh);
}

BasisSpace make_space(Mesh mesh, std::optional<EnrichmentSpec> enrichment) {
  BasisSpace space;
  space.geometry = std::holds_alternative<Mesh1D>(mesh) ? Geometry::interval : Geometry::disk;
  space.mesh = std::move(mesh);
  if (enrichment) enrichment->validate();
  space.enrichment = enrichment;

  if (space.geometry == Geometry::interval) {
    const Mesh1D& m = space.mesh1d();
    if (m.node_count() < 3) throw std::invalid_argument("interval mesh has no interior node");
    space.dof_of_node.assign(m.node_count(), -1);
    for (int i = 0; i < m.node_count(); ++i) {
      if (!is_boundary_1d(m, i)) {
        space.dof_of_node[i] = static_cast<int>(space.node_of_dof.size());
        space.node_of_dof.push_back(i);
      }
    }
    if (enrichment) space.enriched_angles = {0.0, std::numbers::pi};
  } else {
    const Mesh2D& m = space.mesh2d();
    std::vector<char> on_boundary(m.node_count(), 0);
    for (int b : m.boundary_nodes) on_boundary.at(b) = 1;
    space.dof_of_node.assign(m.node_count(), -1);
    for (int i = 0; i < m.node_count(); ++i) {
      if (!on_boundary[i]) {
        space.dof_of_node[i] = static_cast<int>(space.node_of_dof.size());
        space.node_of_dof.push_back(i);
      }
    }
    if (enrichment) {
      for (int b : m.boundary_nodes) space.enriched_angles.push_back(to_fitted(m.nodes[b].x, m.nodes[b].y).eta);
      std::sort(space.enriched_angles.begin(), space.enriched_angles.end());
      if (space.enriched_angles.size() < 3) throw std::invalid_argument("enrichment needs >= 3 boundary nodes");
    }
  }
  space.n_standard = static_cast<int>(space.node_of_dof.size());
  return space;
}

void evaluate_basis(const BasisSpace& space, int cell, double x, double y, double t, std::vector<BasisValue>& out) {
  out.clear();
  if (space.geometry == Geometry::interval) {
    const Mesh1D& m = space.mesh1d();
    if (cell >= 0) {
      const auto& e = m.elements[cell];
      const double x0 = m.nodes[e[0]];
      const double x1 = m.nodes[e[1]];
      const double len = x1 - x0;
      const int a = space.dof_of_node[e[0]];
      const int b = space.dof_of_node[e[1]];
      if (a >= 0) out.push_back({a, (x1 - x) / len, -1.0 / len, 0.0});
      if (b >= 0) out.push_back({b, (x - x0) / len, 1.0 / len, 0.0});
    }
    if (space.enrichment) {
      const EnrichmentSpec& spec = *space.enrichment;
      const double support = spec.support();
      if (x < support) {
        out.push_back({space.n_standard, enrichment_profile(spec, x, t), enrichment_profile_dxi(spec, x, t), 0.0});
      }
      if (1.0 - x < support) {
        out.push_back({space.n_standard + 1, enrichment_profile(spec, 1.0 - x, t),
                       -enrichment_profile_dxi(spec, 1.0 - x, t), 0.0});
      }
    }
    return;
  }

  const Mesh2D& m = space.mesh2d();
  if (cell >= 0) {
    const auto& tri = m.triangles[cell];
    const Point2& p0 = m.nodes[tri[0]];
    const Point2& p1 = m.nodes[tri[1]];
    const Point2& p2 = m.nodes[tri[2]];
    const double two_area = 2.0 * triangle_signed_area(p0, p1, p2);
    const Point2 q{x, y};
    const double lambda[3] = {2.0 * triangle_signed_area(q, p1, p2) / two_area,
                              2.0 * triangle_signed_area(p0, q, p2) / two_area,
                              2.0 * triangle_signed_area(p0, p1, q) / two_area};
    const double gx[3] = {(p1.y - p2.y) / two_area, (p2.y - p0.y) / two_area, (p0.y - p1.y) / two_area};
    const double gy[3] = {(p2.x - p1.x) / two_area, (p0.x - p2.x) / two_area, (p1.x - p0.x) / two_area};
    for (int k = 0; k < 3; ++k) {
      const int a = space.dof_of_node[tri[k]];
      if (a >= 0) out.push_back({a, lambda[k], gx[k], gy[k]});
    }
  }
  if (!space.enrichment) return;
  const EnrichmentSpec& spec = *space.enrichment;
  const double r = std::hypot(x, y);
  const double xi = std::max(0.0, 1.0 - r);
  if (xi >= spec.support()) return;
  // points pushed past the circle by rounding are pulled back onto it
  const FittedCoords fc = r > 1.0 ? to_fitted(x / r, y / r) : to_fitted(x, y);
  const auto& ang = space.enriched_angles;
  const int n = static_cast<int>(ang.size());
  int k = static_cast<int>(std::upper_bound(ang.begin(), ang.end(), fc.eta) - ang.begin()) - 1;
  double eta = fc.eta;
  if (k < 0) {
    k = n - 1;
    eta += kTwoPi;
  }
  const double left = ang[k];
  const double right = (k + 1 < n) ? ang[k + 1] : ang[0] + kTwoPi;
  const double width = right - left;
  const double psi_k = (right - eta) / width;
  const double psi_k1 = (eta - left) / width;
  const double phi = enrichment_profile(spec, fc.xi, t);
  const double dphi = enrichment_profile_dxi(spec, fc.xi, t);
  const GradientTransform tr = gradient_transform({fc.eta, fc.xi});
  const Point2 g0 = tr.apply(-phi / width, dphi * psi_k);
  const Point2 g1 = tr.apply(phi / width, dphi * psi_k1);
  out.push_back({space.n_standard + k, phi * psi_k, g0.x, g0.y});
  out.push_back({space.n_standard + (k + 1) % n, phi * psi_k1, g1.x, g1.y});
}

double evaluate_field(const BasisSpace& space, const Vector& coefficients, int cell, double x, double y, double t,
                      std::vector<BasisValue>& scratch) {
  evaluate_basis(space, cell, x, y, t, scratch);
  double u = 0.0;
  for (const auto& b : scratch) u += coefficients[b.dof] * b.value;
  return u;
}

// ---------------------------------------------------------------------------
// Integration plan

IntegrationPlan::IntegrationPlan(const BasisSpace& space, double epsilon, QuadratureConfig config)
    : space_(&space), epsilon_(epsilon), config_(config) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("integration plan needs epsilon > 0");
  config_.validate();
  layer_scale_ = std::sqrt(4.0 * epsilon);
  layer_zone_ = 20.0 * layer_scale_;
  const double support = space.enrichment ? space.enrichment->support() : 0.0;
  // Pieces within this distance of the boundary get layer-resolving rules.
  polar_width_ = std::max(support, layer_zone_ < 0.5 ? layer_zone_ : 0.0);
  if (space.geometry == Geometry::disk) {
    const Mesh2D& m = space.mesh2d();
    boundary_ring_ = m.boundary_nodes;
    std::sort(boundary_ring_.begin(), boundary_ring_.end(), [&](int a, int b) {
      return to_fitted(m.nodes[a].x, m.nodes[a].y).eta < to_fitted(m.nodes[b].x, m.nodes[b].y).eta;
    });
  }
}

int IntegrationPlan::piece_count() const {
  if (space_->geometry == Geometry::interval) return space_->mesh1d().element_count();
  return space_->mesh2d().triangle_count() + static_cast<int>(boundary_ring_.size());
}

void IntegrationPlan::build_piece(int index, Piece& piece) const {
  piece.points.clear();
  piece.probes.clear();
  if (space_->geometry == Geometry::interval) {
    build_interval_piece(index, piece);
    return;
  }
  const int n_tri = space_->mesh2d().triangle_count();
  if (index < n_tri) {
    build_triangle_piece(index, piece);
  } else {
    build_sliver_piece(index - n_tri, piece);
  }
}

void IntegrationPlan::for_each_piece(const std::function<void(const Piece&)>& visit) const {
  Piece piece;
  const int n = piece_count();
  for (int i = 0; i < n; ++i) {
    build_piece(i, piece);
    visit(piece);
  }
}

void IntegrationPlan::build_interval_piece(int element, Piece& piece) const {
  const Mesh1D& m = space_->mesh1d();
  const double a = m.nodes[m.elements[element][0]];
  const double b = m.nodes[m.elements[element][1]];
  piece.cell = element;
  piece.xi_min = std::min(a, 1.0 - b);
  piece.probes = {{a, 0.0}, {b, 0.0}};

  std::vector<double> breaks{a, b};
  if (space_->enrichment) {
    const double s = space_->enrichment->support();
    for (double p : {s, 1.0 - s}) {
      if (p > a && p < b) breaks.push_back(p);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  const int nsub = config_.layer_subintervals;
  const int ng = config_.layer_gauss_points;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double p = breaks[k];
    const double q = breaks[k + 1];
    if (!(q - p > 1e-15)) continue;
    const bool near0 = p < layer_zone_;
    const bool near1 = 1.0 - q < layer_zone_;
    IntervalRule rule;
    if (near0 && near1) {
      rule = graded_rule(p, q, layer_scale_, nsub, ng, Grading::both);
    } else if (near0) {
      rule = graded_rule(p, q, layer_scale_, nsub, ng, Grading::start);
    } else if (near1) {
      rule = graded_rule(p, q, layer_scale_, nsub, ng, Grading::end);
    } else {
      rule = gauss_interval(ng).mapped(p, q);
    }
    for (std::size_t i = 0; i < rule.size(); ++i) piece.points.push_back({rule.points[i], 0.0, rule.weights[i]});
  }
}

namespace {

// Angular rule on [a, b] graded toward an end where the radial limits
// xi_lo(theta), xi_hi(theta) enter the layer. Near a boundary vertex the wedge
// between them is thinner than the layer, so the steeper limit sets the scale.
template <class XiLo, class XiHi>
IntervalRule angular_rule(double a, double b, XiLo&& xi_lo, XiHi&& xi_hi, double layer_scale, double layer_zone,
                          int n_sub, int n_gauss) {
  const double mid = 0.5 * (a + b);
  auto end_scale = [&](double end, double toward) {
    const double half = std::abs(toward - end);
    const double x0 = xi_lo(end);
    if (x0 >= layer_zone) return half;
    const double d = half / 32.0;
    const double step = toward > end ? d : -d;
    double slope = std::abs(xi_lo(end + step) - x0) / d;
    const double h0 = xi_hi(end);
    if (h0 < layer_zone) slope = std::max(slope, std::abs(xi_hi(end + step) - h0) / d);
    if (!(slope > 0.0)) return half;
    return std::min(half, (layer_scale + x0) / slope);
  };
  IntervalRule left = graded_rule(a, mid, end_scale(a, mid), n_sub, n_gauss, Grading::start);
  IntervalRule right = graded_rule(mid, b, end_scale(b, mid), n_sub, n_gauss, Grading::end);
  left.points.insert(left.points.end(), right.points.begin(), right.points.end());
  left.weights.insert(left.weights.end(), right.weights.begin(), right.weights.end());
  return left;
}

}  // namespace

void IntegrationPlan::build_triangle_piece(int triangle, Piece& piece) const {
  const Mesh2D& m = space_->mesh2d();
  const auto& tri = m.triangles[triangle];
  const Point2 v[3] = {m.nodes[tri[0]], m.nodes[tri[1]], m.nodes[tri[2]]};
  piece.cell = triangle;
  piece.probes = {v[0], v[1], v[2]};
  double xi_min = 1.0;
  for (const auto& p : v) xi_min = std::min(xi_min, 1.0 - std::hypot(p.x, p.y));
  piece.xi_min = std::max(0.0, xi_min);

  const double area = triangle_signed_area(v[0], v[1], v[2]);
  const bool contains_origin = triangle_signed_area({0, 0}, v[1], v[2]) >= 0 &&
                               triangle_signed_area(v[0], {0, 0}, v[2]) >= 0 &&
                               triangle_signed_area(v[0], v[1], {0, 0}) >= 0;
  if (!(xi_min < polar_width_ - 1e-12) || contains_origin) {
    const TriangleRule rule = gauss_triangle(config_.triangle_degree);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& l = rule.points[q];
      piece.points.push_back({l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
                              l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y, 2.0 * area * rule.weights[q]});
    }
    return;
  }

  // Polar rule: angular sweep split at vertex and boundary-node angles, exact
  // radial extent of the triangle along each ray.
  const double cx = (v[0].x + v[1].x + v[2].x) / 3.0;
  const double cy = (v[0].y + v[1].y + v[2].y) / 3.0;
  const double theta_c = std::atan2(cy, cx);
  std::vector<double> breaks;
  for (const auto& p : v) breaks.push_back(theta_c + std::remainder(std::atan2(p.y, p.x) - theta_c, kTwoPi));
  std::sort(breaks.begin(), breaks.end());
  const double lo = breaks.front();
  const double hi = breaks.back();
  for (double alpha : space_->enriched_angles) {
    const double a = theta_c + std::remainder(alpha - theta_c, kTwoPi);
    if (a > lo + 1e-14 && a < hi - 1e-14) breaks.push_back(a);
  }
  std::sort(breaks.begin(), breaks.end());

  const double support = space_->enrichment ? space_->enrichment->support() : -1.0;
  auto xi_lo = [&](double theta) { return 1.0 - ray_triangle(theta, v).r_out; };
  auto xi_hi = [&](double theta) { return 1.0 - ray_triangle(theta, v).r_in; };
  std::vector<double> radial_breaks;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    if (!(b - a > 1e-13)) continue;
    const IntervalRule ang = angular_rule(a, b, xi_lo, xi_hi, layer_scale_, layer_zone_, config_.angular_subintervals,
                                          config_.angular_gauss_points);
    for (std::size_t i = 0; i < ang.size(); ++i) {
      const double theta = ang.points[i];
      const RadialRange rr = ray_triangle(theta, v);
      const double xa = 1.0 - rr.r_out;
      const double xb = 1.0 - rr.r_in;
      if (!(xb > xa)) continue;
      radial_breaks = {xa, xb};
      if (support > xa && support < xb) radial_breaks.insert(radial_breaks.begin() + 1, support);
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      for (std::size_t j = 0; j + 1 < radial_breaks.size(); ++j) {
        const double p = radial_breaks[j];
        const double q = radial_breaks[j + 1];
        const IntervalRule rad = p < layer_zone_
                                     ? graded_rule(p, q, layer_scale_, config_.layer_subintervals,
                                                   config_.layer_gauss_points, Grading::start)
                                     : gauss_interval(config_.layer_gauss_points).mapped(p, q);
        for (std::size_t l = 0; l < rad.size(); ++l) {
          const double r = 1.0 - rad.points[l];
          piece.points.push_back({r * c, r * s, ang.weights[i] * rad.weights[l] * r});
        }
      }
    }
  }
}

void IntegrationPlan::build_sliver_piece(int edge, Piece& piece) const {
  const Mesh2D& m = space_->mesh2d();
  const int n = static_cast<int>(boundary_ring_.size());
  const Point2 p = m.nodes[boundary_ring_[edge]];
  const Point2 q = m.nodes[boundary_ring_[(edge + 1) % n]];
  piece.cell = -1;
  piece.xi_min = 0.0;
  double a = std::atan2(p.y, p.x);
  double b = a + std::remainder(std::atan2(q.y, q.x) - a, kTwoPi);
  if (b < a) std::swap(a, b);
  auto xi_chord = [&](double theta) {
    const double r = ray_segment(std::cos(theta), std::sin(theta), p, q);
    return r > 0.0 ? std::max(0.0, 1.0 - r) : 0.0;
  };
  // Grade toward the chord ends, where the sliver thins out below the layer scale.
  const IntervalRule ang = angular_rule(a, b, [](double) { return 0.0; }, xi_chord, layer_scale_, layer_zone_,
                                        config_.angular_subintervals, config_.angular_gauss_points);
  const double support = space_->enrichment ? space_->enrichment->support() : -1.0;
  for (std::size_t i = 0; i < ang.size(); ++i) {
    const double theta = ang.points[i];
    const double top = xi_chord(theta);
    if (!(top > 0.0)) continue;
    std::vector<double> rb{0.0, top};
    if (support > 0.0 && support < top) rb.insert(rb.begin() + 1, support);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t j = 0; j + 1 < rb.size(); ++j) {
      const IntervalRule rad = rb[j] < layer_zone_
                                   ? graded_rule(rb[j], rb[j + 1], layer_scale_, config_.layer_subintervals,
                                                 config_.layer_gauss_points, Grading::start)
                                   : gauss_interval(config_.layer_gauss_points).mapped(rb[j], rb[j + 1]);
      for (std::size_t l = 0; l < rad.size(); ++l) {
        const double r = 1.0 - rad.points[l];
        piece.points.push_back({r * c, r * s, ang.weights[i] * rad.weights[l] * r});
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Assembly

AssembledSystem assemble_standard(const BasisSpace& space, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  std::vector<Triplet> mass, stiff;
  exact_p1_blocks(space, epsilon, mass, stiff);
  AssembledSystem sys;
  sys.mass = from_triplets(space.size(), mass);
  sys.stiffness = from_triplets(space.size(), stiff);
  return sys;
}

AssembledSystem assemble_enriched(const BasisSpace& space, const IntegrationPlan& plan, double epsilon, double t) {
  if (!space.enrichment) throw std::invalid_argument("assemble_enriched needs an enriched space");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  std::vector<Triplet> mass, stiff;
  exact_p1_blocks(space, epsilon, mass, stiff);

  const int n_std = space.n_standard;
  const int n_pieces = plan.piece_count();
  const int chunks = std::min(kChunks, n_pieces);
  std::vector<std::vector<Triplet>> chunk_mass(chunks), chunk_stiff(chunks);
  for_chunks(n_pieces, chunks, [&](int chunk, int begin, int end) {
    Piece piece;
    std::vector<BasisValue> vals;
    LocalBlock lm, lk;
    for (int p = begin; p < end; ++p) {
      plan.build_piece(p, piece);
      lm.clear();
      lk.clear();
      for (const auto& qp : piece.points) {
        evaluate_basis(space, piece.cell, qp.x, qp.y, t, vals);
        bool any_enriched = false;
        for (const auto& v : vals) any_enriched |= v.dof >= n_std;
        if (!any_enriched) continue;
        for (std::size_t i = 0; i < vals.size(); ++i) {
          for (std::size_t j = i; j < vals.size(); ++j) {
            if (vals[i].dof < n_std && vals[j].dof < n_std) continue;
            const int si = lm.slot(vals[i].dof);
            const int sj = lm.slot(vals[j].dof);
            lk.slot(vals[i].dof);
            lk.slot(vals[j].dof);
            const double mv = qp.w * vals[i].value * vals[j].value;
            const double kv = qp.w * epsilon * (vals[i].dx * vals[j].dx + vals[i].dy * vals[j].dy);
            // keep the accumulator upper-triangular in global DOF order
            const int a = vals[i].dof <= vals[j].dof ? si : sj;
            const int b = vals[i].dof <= vals[j].dof ? sj : si;
            lm.at(a, b) += mv;
            lk.at(a, b) += kv;
          }
        }
      }
      const std::size_t n = lm.dofs.size();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const int a = lm.dofs[i];
          const int b = lm.dofs[j];
          if (a > b) continue;
          const double mv = lm.at(i, j);
          const double kv = lk.at(i, j);
          if (mv == 0.0 && kv == 0.0) continue;
          chunk_mass[chunk].emplace_back(a, b, mv);
          chunk_stiff[chunk].emplace_back(a, b, kv);
          if (a != b) {
            chunk_mass[chunk].emplace_back(b, a, mv);
            chunk_stiff[chunk].emplace_back(b, a, kv);
          }
        }
      }
    }
  });
  for (int c = 0; c < chunks; ++c) {
    mass.insert(mass.end(), chunk_mass[c].begin(), chunk_mass[c].end());
    stiff.insert(stiff.end(), chunk_stiff[c].begin(), chunk_stiff[c].end());
  }
  AssembledSystem sys;
  sys.mass = from_triplets(space.size(), mass);
  sys.stiffness = from_triplets(space.size(), stiff);
  sys.assembled_at = t;

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> check(sys.mass);
  if (check.info() != Eigen::Success) {
    throw NotPositiveDefinite(
        "enriched Gram matrix is numerically singular (enrichment nearly collinear with the P1 hats)",
        std::numeric_limits<double>::quiet_NaN());
  }
  return sys;
}

SparseMatrix assemble_cross_mass(const BasisSpace& space, const IntegrationPlan& plan, double t_test,
                                 double t_trial) {
  std::vector<Triplet> mass, stiff;
  exact_p1_blocks(space, 1.0, mass, stiff);
  const int n_std = space.n_standard;
  if (space.enrichment) {
    const int n_pieces = plan.piece_count();
    const int chunks = std::min(kChunks, n_pieces);
    std::vector<std::vector<Triplet>> chunk_mass(chunks);
    for_chunks(n_pieces, chunks, [&](int chunk, int begin, int end) {
      Piece piece;
      std::vector<BasisValue> test, trial;
      LocalBlock lm;
      for (int p = begin; p < end; ++p) {
        plan.build_piece(p, piece);
        lm.clear();
        for (const auto& qp : piece.points) {
          evaluate_basis(space, piece.cell, qp.x, qp.y, t_test, test);
          evaluate_basis(space, piece.cell, qp.x, qp.y, t_trial, trial);
          for (const auto& a : test) {
            for (const auto& b : trial) {
              if (a.dof < n_std && b.dof < n_std) continue;
              const int sa = lm.slot(a.dof);
              const int sb = lm.slot(b.dof);
              lm.at(sa, sb) += qp.w * a.value * b.value;
            }
          }
        }
        const std::size_t n = lm.dofs.size();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (lm.at(i, j) != 0.0) chunk_mass[chunk].emplace_back(lm.dofs[i], lm.dofs[j], lm.at(i, j));
          }
        }
      }
    });
    for (auto& c : chunk_mass) mass.insert(mass.end(), c.begin(), c.end());
  }
  return from_triplets(space.size(), mass);
}

Vector assemble_load(const BasisSpace& space, const IntegrationPlan& plan, const SpaceFn& g, double t) {
  Vector total = Vector::Zero(space.size());
  if (!g) return total;
  const int n_pieces = plan.piece_count();
  const int chunks = std::min(kChunks, n_pieces);
  std::vector<Vector> partial(chunks, Vector::Zero(space.size()));
  for_chunks(n_pieces, chunks, [&](int chunk, int begin, int end) {
    Piece piece;
    std::vector<BasisValue> vals;
    Vector& b = partial[chunk];
    for (int p = begin; p < end; ++p) {
      plan.build_piece(p, piece);
      for (const auto& qp : piece.points) {
        evaluate_basis(space, piece.cell, qp.x, qp.y, t, vals);
        if (vals.empty()) continue;
        const double gw = g(qp.x, qp.y) * qp.w;
        for (const auto& v : vals) b[v.dof] += gw * v.value;
      }
    }
  });
  for (const auto& b : partial) total += b;
  return total;
}

Vector project_initial(const BasisSpace& space, const IntegrationPlan& plan, const SparseMatrix& mass,
                       const SpaceFn& u0, const SolverConfig& config) {
  if (!u0) return Vector::Zero(space.size());
  const Vector b = assemble_load(space, plan, u0, 0.0);
  return solve_spd(mass, b, config);
}

void write_matrix(std::ostream& out, const SparseMatrix& matrix) {
  char buf[96];
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()), static_cast<int>(it.col()),
                    it.value());
      out << buf;
    }
  }
}

}  // namespace blfem
