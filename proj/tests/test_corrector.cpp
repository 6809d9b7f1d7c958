#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "blfem/analysis.hpp"
#include "blfem/corrector.hpp"
#include "test_util.hpp"

using namespace blfem;

namespace {

EnrichmentSpec spec_of(EnrichmentKind kind, double eps, double sigma = 0.02) {
  EnrichmentSpec s;
  s.kind = kind;
  s.epsilon = eps;
  s.sigma = sigma;
  return s;
}

ProblemData constant_source_disk(double value) {
  ProblemData d;
  d.geometry = Geometry::disk;
  d.epsilon = 1e-4;
  d.f = [value](double, double, double) { return value; };
  d.f_antiderivative = [value](double, double, double t) { return value * t; };
  d.u0_initial = [](double, double) { return 0.0; };
  return d;
}

}  // namespace

TEST_CASE("limit solution") {
  const ProblemData one = constant_source_disk(1.0);
  CHECK(limit_solution(one, 0.2, 0.1, 0.7) == doctest::Approx(0.7));
  const ProblemData zero = constant_source_disk(0.0);
  CHECK(limit_solution(zero, 0.2, 0.1, 0.7) == 0.0);

  const BuiltinProblem p = make_builtin_problem("exact2d", 1e-4, 1.0);
  for (double t : {0.0, 0.5, 1.0}) {
    const double u0 = p.data.u0_initial(0.3, 0.4);
    CHECK(limit_solution(p.data, 0.3, 0.4, t) == doctest::Approx(u0 + std::exp(t) - 1.0).epsilon(1e-12));
  }
}

TEST_CASE("heat kernel") {
  CHECK(heat_kernel_I(0.0, 0.3, 1e-4) == doctest::Approx(1.0));
  const double eps = 1e-4, t = 0.5;
  // erfc_paper argument xi / sqrt(2 eps t) = 10
  CHECK(heat_kernel_I(10.0 * std::sqrt(2 * eps * t), t, eps) < 1e-10);

  SUBCASE("solves I_t = eps I_xixi") {
    const double xi = 0.01;
    const double ht = 1e-5, hx = 1e-5;
    const double it = (heat_kernel_I(xi, t + ht, eps) - heat_kernel_I(xi, t - ht, eps)) / (2 * ht);
    const double ixx =
        (heat_kernel_I(xi + hx, t, eps) - 2 * heat_kernel_I(xi, t, eps) + heat_kernel_I(xi - hx, t, eps)) / (hx * hx);
    CHECK(std::abs(it - eps * ixx) < 1e-6 * std::abs(it));
  }
}

TEST_CASE("corrector boundary value cancels the limit solution") {
  const BuiltinProblem p = make_builtin_problem("exact2d", 1e-4, 1.0);
  for (double eta : {0.0, 1.0, 4.0}) {
    for (double t : {0.1, 0.5, 1.0}) {
      const Point2 b = boundary_point(Geometry::disk, eta);
      CHECK(theta0(p.data, eta, 0.0, t) == doctest::Approx(-limit_solution(p.data, b.x, b.y, t)).epsilon(1e-8));
    }
  }
  CHECK(theta0(p.data, 0.0, 0.01, 0.0) == 0.0);
  CHECK(theta0(constant_source_disk(0.0), 1.0, 0.01, 0.5) == 0.0);
}

TEST_CASE("corrector decays like a Gaussian in xi") {
  const BuiltinProblem p = make_builtin_problem("exact2d", 1e-4, 1.0);
  const double kappa = 2.0 * std::exp(1.0);  // 2 max |f| on the boundary for t <= 1
  for (double eta : {0.0, 2.0}) {
    for (double t : {0.05, 0.4, 1.0}) {
      for (double xi : {0.0, 0.005, 0.02, 0.05}) {
        CHECK(std::abs(theta0(p.data, eta, xi, t)) <= kappa * std::exp(-xi * xi / (4 * 1e-4 * t)) + 1e-15);
      }
    }
  }
  for (double eps : {1e-4, 1e-6}) {
    const BuiltinProblem q = make_builtin_problem("exact2d", eps, 1.0);
    for (double t : {0.1, 1.0}) CHECK(std::abs(theta0(q.data, 0.5, 0.25, t)) < 1e-30);
  }
}

TEST_CASE("cutoff") {
  CutoffSpec c;
  CHECK(cutoff_delta(c, 0.1) == 1.0);
  CHECK(cutoff_delta(c, 0.75) == 0.0);
  CHECK(cutoff_delta(c, 0.375) == doctest::Approx(0.5));
  double prev = 1.0;
  for (int i = 0; i <= 200; ++i) {
    const double xi = i / 200.0;
    const double d = cutoff_delta(c, xi);
    CHECK(d <= prev + 1e-15);
    prev = d;
    if (xi > 0.01 && xi < 0.99) {
      const double h = 1e-6;
      CHECK(cutoff_delta_dxi(c, xi) == doctest::Approx((cutoff_delta(c, xi + h) - cutoff_delta(c, xi - h)) / (2 * h)).epsilon(1e-6));
    }
  }
  CutoffSpec bad{0.5, 0.25};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const BuiltinProblem p = make_builtin_problem("exact2d", 1e-4, 1.0);
  CHECK(theta0_cutoff(p.data, c, 0.0, 0.6, 1.0) == 0.0);
  CHECK(theta0_cutoff(p.data, c, 0.0, 0.01, 1.0) == theta0(p.data, 0.0, 0.01, 1.0));
}

TEST_CASE("enrichment profiles at the boundary") {
  const double eps = 1e-5;
  CHECK(enrichment_profile(spec_of(EnrichmentKind::phi_minus1, eps), 0.0, 1.0) == 0.0);
  CHECK(enrichment_profile(spec_of(EnrichmentKind::phi_minus1_lin, eps), 0.0, 1.0) == 0.0);
  CHECK(enrichment_profile(spec_of(EnrichmentKind::phi_minus1_lin, eps), 0.02, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(enrichment_profile(spec_of(EnrichmentKind::phi0_tilde, eps), 0.0, 1.0) == 0.0);
  for (double t : {0.25, 0.5, 2.0}) {
    CHECK(enrichment_profile(spec_of(EnrichmentKind::phi0, eps), 0.0, t) == doctest::Approx(1.0 - t).epsilon(1e-10));
  }
  // t -> 0+ convention
  CHECK(enrichment_profile(spec_of(EnrichmentKind::phi0_tilde, eps), 0.1, 0.0) == 1.0);
  CHECK(enrichment_profile(spec_of(EnrichmentKind::phi0_tilde, eps), 0.0, 0.0) == 0.0);

  const double sigma = 0.02;
  CHECK(enrichment_profile_dxi(spec_of(EnrichmentKind::phi_minus1_lin, eps, sigma), 0.0, 1.0) ==
        doctest::Approx(-(1.0 - std::exp(-sigma * sigma / (4 * eps))) / sigma));
  CHECK(enrichment_profile_dxi(spec_of(EnrichmentKind::phi_minus1, eps), 0.6, 1.0) == 0.0);
}

TEST_CASE("profile derivatives agree with finite differences") {
  std::mt19937 rng(7);
  const double eps = 1e-4;
  std::uniform_real_distribution<double> u(0.002, 0.45);
  for (EnrichmentKind k :
       {EnrichmentKind::phi0, EnrichmentKind::phi0_tilde, EnrichmentKind::phi_minus1, EnrichmentKind::phi_minus1_lin}) {
    const EnrichmentSpec s = spec_of(k, eps, 0.05);
    for (int i = 0; i < 100; ++i) {
      const double xi = u(rng);
      if (k == EnrichmentKind::phi_minus1_lin && std::abs(xi - 0.05) < 1e-4) continue;
      const double h = 1e-6 * std::max(xi, 1e-3);
      const double fd = (enrichment_profile(s, xi + h, 0.7) - enrichment_profile(s, xi - h, 0.7)) / (2 * h);
      const double an = enrichment_profile_dxi(s, xi, 0.7);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(std::abs(an), 1e-3));
    }
  }
}

TEST_CASE("phi0 integral matches adaptive quadrature of the heat kernel") {
  // phi0 = (1 - int_0^t I(xi, s) ds) delta(xi)
  const double eps = 1e-5, t = 0.8;
  for (double xi : {0.001, 0.005, 0.02}) {
    const double j = testutil::simpson([&](double s) { return s > 0 ? heat_kernel_I(xi, s, eps) : 0.0; }, 0.0, t, 400000);
    CHECK(enrichment_profile(spec_of(EnrichmentKind::phi0, eps), xi, t) == doctest::Approx(1.0 - j).epsilon(1e-7));
  }
}

TEST_CASE("layer thickness scales with sqrt(eps)") {
  std::vector<double> ratios;
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const EnrichmentSpec s = spec_of(EnrichmentKind::phi_minus1, eps);
    double lo = 0.0, hi = 0.25;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (enrichment_profile(s, mid, 1.0) < 0.5 ? lo : hi) = mid;
    }
    const double crossing = 0.5 * (lo + hi);
    CHECK(crossing == doctest::Approx(std::sqrt(4 * eps * std::log(2.0))).epsilon(1e-8));
    ratios.push_back(crossing / std::sqrt(eps));
  }
  CHECK(ratios[1] == doctest::Approx(ratios[0]).epsilon(0.01));
  CHECK(ratios[2] == doctest::Approx(ratios[0]).epsilon(0.01));
}

TEST_CASE("profiles agree away from the wall at t = 1, and drift apart at late times") {
  const double eps = 1e-5, se = std::sqrt(eps);
  const EnrichmentSpec a = spec_of(EnrichmentKind::phi0, eps);
  const EnrichmentSpec b = spec_of(EnrichmentKind::phi_minus1, eps);
  const EnrichmentSpec c = spec_of(EnrichmentKind::phi0_tilde, eps);
  auto max_gap = [&](double t, double from) {
    double g = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double xi = from * std::pow(0.25 / from, i / 400.0);
      const double p = enrichment_profile(a, xi, t);
      g = std::max(g, std::abs(p - enrichment_profile(b, xi, t)) / std::abs(p));
      g = std::max(g, std::abs(p - enrichment_profile(c, xi, t)) / std::abs(p));
    }
    return g;
  };
  // the 10% band holds from about 3 sqrt(eps); closer to the wall the profiles differ more
  CHECK(max_gap(1.0, 3.0 * se) < 0.10);
  CHECK(max_gap(1.0, 2.0 * se) > 0.10);
  CHECK(max_gap(1000.0, 3.0 * se) > max_gap(1.0, 3.0 * se));
}

TEST_CASE("spec validation") {
  EnrichmentSpec s = spec_of(EnrichmentKind::phi_minus1_lin, 1e-5, 0.0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.sigma = 0.9;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.sigma = 0.02;
  CHECK_NOTHROW(s.validate());
  s.epsilon = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK(enrichment_kind_from_string("phi_m1_lin") == EnrichmentKind::phi_minus1_lin);
  CHECK(to_string(EnrichmentKind::phi0_tilde) == "phi0_tilde");
  CHECK_THROWS_AS(enrichment_kind_from_string("bogus"), std::invalid_argument);
  CHECK(is_time_dependent(EnrichmentKind::phi0));
  CHECK_FALSE(is_time_dependent(EnrichmentKind::phi_minus1_lin));
}

TEST_CASE("compatibility checks") {
  ProblemData d = constant_source_disk(0.0);
  CHECK(d.check_compatibility().empty());
  d.f = [](double, double, double t) { return std::exp(t); };
  CHECK(d.check_compatibility().size() == 1);
  d.u0_initial = [](double, double) { return 1.0; };
  CHECK_THROWS_AS(d.check_compatibility(), std::invalid_argument);
}
