#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "blfem/assembly.hpp"
#include "test_util.hpp"

using namespace blfem;

namespace {

EnrichmentSpec lin_spec(double eps, double sigma) {
  EnrichmentSpec s;
  s.kind = EnrichmentKind::phi_minus1_lin;
  s.epsilon = eps;
  s.sigma = sigma;
  return s;
}

double max_abs(const SparseMatrix& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

double max_diff(const SparseMatrix& a, const SparseMatrix& b) {
  const SparseMatrix d = a - b;
  return max_abs(d);
}

// Diamond patch: one free node at the origin, four Dirichlet nodes at distance a.
Mesh2D diamond(double a) {
  Mesh2D m;
  m.nodes = {{0, 0}, {a, 0}, {0, a}, {-a, 0}, {0, -a}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}};
  m.boundary_nodes = {1, 2, 3, 4};
  m.h = a * std::sqrt(2.0);
  return m;
}

}  // namespace

TEST_CASE("1D P1 element matrices match the closed forms") {
  const double eps = 0.37;
  const int n = 8;
  const double h = 1.0 / n;
  const BasisSpace space = make_space(build_interval_mesh(n));
  const AssembledSystem sys = assemble_standard(space, eps);
  REQUIRE(space.size() == n - 1);
  const Eigen::MatrixXd m = Eigen::MatrixXd(sys.mass);
  const Eigen::MatrixXd k = Eigen::MatrixXd(sys.stiffness);
  for (int i = 0; i < n - 1; ++i) {
    for (int j = 0; j < n - 1; ++j) {
      const double me = i == j ? 2 * h / 3 : (std::abs(i - j) == 1 ? h / 6 : 0.0);
      const double ke = i == j ? 2 * eps / h : (std::abs(i - j) == 1 ? -eps / h : 0.0);
      CHECK(std::abs(m(i, j) - me) < 1e-12);
      CHECK(std::abs(k(i, j) - ke) < 1e-12);
    }
  }
}

TEST_CASE("2D P1 element matrices on a patch with known values") {
  const double a = 0.1, eps = 2.5;
  const BasisSpace space = make_space(diamond(a));
  const AssembledSystem sys = assemble_standard(space, eps);
  REQUIRE(space.size() == 1);
  // 4 triangles of area a^2/2, diagonal mass area/6 each; |grad|^2 * area = 1 each
  CHECK(std::abs(sys.mass.coeff(0, 0) - 4 * (a * a / 2) / 6) < 1e-12);
  CHECK(std::abs(sys.stiffness.coeff(0, 0) - 4 * eps) < 1e-12);
}

TEST_CASE("degenerate elements are rejected") {
  Mesh2D m = diamond(0.1);
  m.nodes[2] = {0.05, 0.0};  // collapses triangle {0, 1, 2}
  CHECK_THROWS_AS(assemble_standard(make_space(m), 1.0), std::invalid_argument);
}

TEST_CASE("standard matrices on the disk") {
  const BasisSpace space = make_space(build_disk_mesh(24));
  const AssembledSystem one = assemble_standard(space, 1.0);
  const AssembledSystem two = assemble_standard(space, 2.0);
  CHECK(max_diff(one.mass, SparseMatrix(one.mass.transpose())) == 0.0);
  CHECK(max_diff(one.stiffness, SparseMatrix(one.stiffness.transpose())) == 0.0);
  CHECK(max_diff(SparseMatrix(2.0 * one.stiffness), two.stiffness) < 1e-14 * max_abs(two.stiffness));
  CHECK(max_diff(one.mass, two.mass) == 0.0);
}

TEST_CASE("hat functions form a partition of unity on interior triangles") {
  const BasisSpace space = make_space(build_disk_mesh(24));
  const Mesh2D& m = space.mesh2d();
  std::vector<BasisValue> vals;
  int checked = 0;
  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& v = m.triangles[t];
    if (space.dof_of_node[v[0]] < 0 || space.dof_of_node[v[1]] < 0 || space.dof_of_node[v[2]] < 0) continue;
    const double x = 0.2 * m.nodes[v[0]].x + 0.5 * m.nodes[v[1]].x + 0.3 * m.nodes[v[2]].x;
    const double y = 0.2 * m.nodes[v[0]].y + 0.5 * m.nodes[v[1]].y + 0.3 * m.nodes[v[2]].y;
    evaluate_basis(space, t, x, y, 0.5, vals);
    double s = 0.0, gx = 0.0, gy = 0.0;
    for (const auto& b : vals) {
      s += b.value;
      gx += b.dx;
      gy += b.dy;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(gx) < 1e-11);
    CHECK(std::abs(gy) < 1e-11);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("enriched basis gradients agree with finite differences") {
  SUBCASE("interval") {
    const double eps = 1e-4, sigma = 0.1;
    const BasisSpace space = make_space(build_interval_mesh(10), lin_spec(eps, sigma));
    CHECK(space.n_enriched() == 2);
    std::vector<BasisValue> a, b, c;
    for (double x : {0.003, 0.02, 0.07, 0.95}) {
      const int cell = static_cast<int>(x * 10);
      const double h = 1e-7;
      evaluate_basis(space, cell, x, 0, 1.0, a);
      evaluate_basis(space, cell, x + h, 0, 1.0, b);
      evaluate_basis(space, cell, x - h, 0, 1.0, c);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].dof < space.n_standard) continue;
        CHECK(a[i].dx == doctest::Approx((b[i].value - c[i].value) / (2 * h)).epsilon(1e-5));
      }
    }
  }
  SUBCASE("disk") {
    const double eps = 1e-3;
    const Mesh2D mesh = build_disk_mesh(16);
    const BasisSpace space = make_space(mesh, lin_spec(eps, mesh.ring_width));
    CHECK(space.n_enriched() == 16);
    auto values = [&](double x, double y) {
      std::vector<BasisValue> out;
      evaluate_basis(space, -1, x, y, 1.0, out);
      std::map<int, BasisValue> byd;
      for (const auto& v : out) byd[v.dof] = v;
      return byd;
    };
    const double r = 1.0 - 0.3 * mesh.ring_width, th = 0.37, h = 1e-7;
    const double x = r * std::cos(th), y = r * std::sin(th);
    auto p = values(x, y), px = values(x + h, y), mx = values(x - h, y), py = values(x, y + h), my = values(x, y - h);
    REQUIRE(!p.empty());
    for (const auto& [dof, v] : p) {
      CHECK(v.dx == doctest::Approx((px[dof].value - mx[dof].value) / (2 * h)).epsilon(1e-5));
      CHECK(v.dy == doctest::Approx((py[dof].value - my[dof].value) / (2 * h)).epsilon(1e-5));
    }
    // enrichment vanishes on the circle
    for (const auto& [dof, v] : values(std::cos(1.0), std::sin(1.0))) CHECK(std::abs(v.value) < 1e-14);
  }
}

TEST_CASE("enriched matrices are symmetric positive definite and scale with eps") {
  const double eps = 1e-5;
  const BasisSpace space = make_space(build_interval_mesh(50), lin_spec(eps, 0.02));
  const IntegrationPlan plan(space, eps);
  const AssembledSystem sys = assemble_enriched(space, plan, eps, 1.0);
  CHECK(max_diff(sys.mass, SparseMatrix(sys.mass.transpose())) == 0.0);
  CHECK(max_diff(sys.stiffness, SparseMatrix(sys.stiffness.transpose())) == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(sys.mass));
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  const AssembledSystem twice = assemble_enriched(space, plan, 2 * eps, 1.0);
  CHECK(max_diff(SparseMatrix(2.0 * sys.stiffness), twice.stiffness) < 1e-13 * max_abs(twice.stiffness));
  // static basis: cross mass is the mass
  CHECK(max_diff(assemble_cross_mass(space, plan, 1.0, 0.99), sys.mass) < 1e-15 * max_abs(sys.mass));
}

TEST_CASE("1D enriched entries match independent integrals") {
  const double eps = 1e-5, sigma = 0.02;
  const BasisSpace space = make_space(build_interval_mesh(50), lin_spec(eps, sigma));
  const IntegrationPlan plan(space, eps);
  const AssembledSystem sys = assemble_enriched(space, plan, eps, 1.0);
  const EnrichmentSpec s = lin_spec(eps, sigma);
  auto phi = [&](double x) { return enrichment_profile(s, x, 1.0); };
  auto dphi = [&](double x) { return enrichment_profile_dxi(s, x, 1.0); };
  const int e0 = space.n_standard, e1 = space.n_standard + 1;
  const double mm = testutil::simpson([&](double x) { return phi(x) * phi(x); }, 0.0, sigma, 400000);
  const double kk = eps * testutil::simpson([&](double x) { return dphi(x) * dphi(x); }, 0.0, sigma, 400000);
  CHECK(sys.mass.coeff(e0, e0) == doctest::Approx(mm).epsilon(1e-9));
  CHECK(sys.mass.coeff(e1, e1) == doctest::Approx(mm).epsilon(1e-9));
  CHECK(sys.stiffness.coeff(e0, e0) == doctest::Approx(kk).epsilon(1e-9));
  CHECK(sys.mass.coeff(e0, e1) == 0.0);
  // coupling with the first hat (node at x = h = sigma)
  const double h = 0.02;
  const double mh = testutil::simpson([&](double x) { return phi(x) * x / h; }, 0.0, sigma, 400000);
  CHECK(sys.mass.coeff(e0, 0) == doctest::Approx(mh).epsilon(1e-9));
  CHECK(sys.mass.coeff(0, e0) == sys.mass.coeff(e0, 0));

  const Vector load = assemble_load(space, plan, [](double, double) { return 1.0; }, 1.0);
  CHECK(load[5] == doctest::Approx(h).epsilon(1e-13));
  CHECK(load[e0] == doctest::Approx(testutil::simpson(phi, 0.0, sigma, 400000)).epsilon(1e-9));
}

TEST_CASE("disk enriched entries match the separated polar integrals") {
  const double eps = 1e-4;
  const int n_b = 16;
  const Mesh2D mesh = build_disk_mesh(n_b);
  const double sigma = mesh.ring_width;
  const BasisSpace space = make_space(mesh, lin_spec(eps, sigma));
  const IntegrationPlan plan(space, eps);
  const AssembledSystem sys = assemble_enriched(space, plan, eps, 1.0);
  const EnrichmentSpec s = lin_spec(eps, sigma);
  auto phi = [&](double x) { return enrichment_profile(s, x, 1.0); };
  auto dphi = [&](double x) { return enrichment_profile_dxi(s, x, 1.0); };
  const double d = 2 * M_PI / n_b;
  // periodic angular hats with spacing d: int psi^2 = 2d/3, int psi psi_next = d/6, int psi'^2 = 2/d
  const double r_mass = testutil::simpson([&](double x) { return phi(x) * phi(x) * (1 - x); }, 0.0, sigma, 400000);
  const double r_grad = testutil::simpson([&](double x) { return dphi(x) * dphi(x) * (1 - x); }, 0.0, sigma, 400000);
  const double r_ang = testutil::simpson([&](double x) { return phi(x) * phi(x) / (1 - x); }, 0.0, sigma, 400000);
  const int e = space.n_standard;
  CHECK(sys.mass.coeff(e, e) == doctest::Approx(2 * d / 3 * r_mass).epsilon(1e-8));
  CHECK(sys.mass.coeff(e, e + 1) == doctest::Approx(d / 6 * r_mass).epsilon(1e-8));
  CHECK(sys.stiffness.coeff(e, e) == doctest::Approx(eps * (2 * d / 3 * r_grad + 2 / d * r_ang)).epsilon(1e-8));
  CHECK(sys.stiffness.coeff(e, e + 1) == doctest::Approx(eps * (d / 6 * r_grad - 1 / d * r_ang)).epsilon(1e-8));
}

TEST_CASE("doubling the quadrature density changes the matrices by < 1e-8") {
  SUBCASE("interval") {
    const double eps = 1e-5;
    const BasisSpace space = make_space(build_interval_mesh(50), lin_spec(eps, 0.02));
    const AssembledSystem a = assemble_enriched(space, IntegrationPlan(space, eps), eps, 1.0);
    const AssembledSystem b = assemble_enriched(space, IntegrationPlan(space, eps, QuadratureConfig{}.refined()), eps, 1.0);
    CHECK(max_diff(a.mass, b.mass) < 1e-8 * max_abs(a.mass));
    CHECK(max_diff(a.stiffness, b.stiffness) < 1e-8 * max_abs(a.stiffness));
  }
  SUBCASE("disk") {
    const double eps = 1e-6;
    const Mesh2D mesh = build_disk_mesh(24);
    const BasisSpace space = make_space(mesh, lin_spec(eps, mesh.ring_width));
    const AssembledSystem a = assemble_enriched(space, IntegrationPlan(space, eps), eps, 1.0);
    const AssembledSystem b = assemble_enriched(space, IntegrationPlan(space, eps, QuadratureConfig{}.refined()), eps, 1.0);
    CHECK(max_diff(a.mass, b.mass) < 1e-8 * max_abs(a.mass));
    CHECK(max_diff(a.stiffness, b.stiffness) < 1e-8 * max_abs(a.stiffness));
  }
}

TEST_CASE("L2 projection reproduces functions in the discrete space") {
  const double eps = 1e-5, sigma = 0.02;
  const BasisSpace space = make_space(build_interval_mesh(50), lin_spec(eps, sigma));
  const IntegrationPlan plan(space, eps);
  const AssembledSystem sys = assemble_enriched(space, plan, eps, 1.0);
  const EnrichmentSpec s = lin_spec(eps, sigma);
  auto u0 = [&](double x, double) {
    const double hat = std::max(0.0, 1.0 - std::abs(x - 0.5) / 0.02);
    return 0.3 * hat + 0.7 * enrichment_profile(s, x, 1.0) - 0.2 * enrichment_profile(s, 1.0 - x, 1.0);
  };
  const Vector c = project_initial(space, plan, sys.mass, u0);
  const int mid = space.dof_of_node[25];
  for (int i = 0; i < space.size(); ++i) {
    const double expect = i == mid ? 0.3 : (i == space.n_standard ? 0.7 : (i == space.n_standard + 1 ? -0.2 : 0.0));
    CHECK(std::abs(c[i] - expect) < 1e-9);
  }
  std::vector<BasisValue> scratch;
  CHECK(evaluate_field(space, c, 25, 0.5, 0.0, 1.0, scratch) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("matrix dump format") {
  const BasisSpace space = make_space(build_interval_mesh(4));
  const AssembledSystem sys = assemble_standard(space, 1.0);
  std::ostringstream out;
  write_matrix(out, sys.stiffness);
  std::istringstream in(out.str());
  int i, j, lines = 0;
  double v;
  while (in >> i >> j >> v) {
    CHECK(v == sys.stiffness.coeff(i, j));
    ++lines;
  }
  CHECK(lines == sys.stiffness.nonZeros());
}

TEST_CASE("quadrature configuration validation") {
  QuadratureConfig q;
  CHECK_NOTHROW(q.validate());
  q.triangle_degree = 0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  const QuadratureConfig r = QuadratureConfig{}.refined();
  CHECK(r.layer_subintervals == 2 * QuadratureConfig{}.layer_subintervals);
}
