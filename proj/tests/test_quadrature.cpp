#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "blfem/quadrature.hpp"
#include "test_util.hpp"

using namespace blfem;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double apply(const IntervalRule& r, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * f(r.points[q]);
  return s;
}

}  // namespace

TEST_CASE("Gauss-Legendre rules integrate polynomials up to degree 2n-1 exactly") {
  for (int n = 1; n <= 20; ++n) {
    const IntervalRule r = gauss_interval(n);
    CHECK(r.size() == static_cast<std::size_t>(n));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      CHECK(apply(r, [k](double x) { return std::pow(x, k); }) == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(gauss_interval(0), std::invalid_argument);
}

TEST_CASE("mapped rules scale with the interval") {
  const IntervalRule r = gauss_interval(5).mapped(2.0, 5.0);
  CHECK(apply(r, [](double x) { return x * x; }) == doctest::Approx((125.0 - 8.0) / 3.0).epsilon(1e-13));
}

TEST_CASE("triangle rules reproduce the monomial formula a! b! / (a+b+2)!") {
  for (int deg = 1; deg <= 10; ++deg) {
    const TriangleRule r = gauss_triangle(deg);
    CHECK(r.exactness_degree >= deg);
    double wsum = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) {
      CHECK(r.points[q][0] + r.points[q][1] + r.points[q][2] == doctest::Approx(1.0).epsilon(1e-14));
      wsum += r.weights[q];
    }
    CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q][1], a) * std::pow(r.points[q][2], b);
        CHECK(s == doctest::Approx(factorial(a) * factorial(b) / factorial(a + b + 2)).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(gauss_triangle(11), std::invalid_argument);
}

TEST_CASE("graded rules resolve exponential layers") {
  for (double s : {1e-2, 1e-3, 1e-4}) {
    const double sigma = 0.05;
    // int_0^sigma e^{-x/s} dx
    const double exact = s * -std::expm1(-sigma / s);
    const IntervalRule r = graded_rule(0.0, sigma, s, 8, 10, Grading::start);
    CHECK(apply(r, [s](double x) { return std::exp(-x / s); }) == doctest::Approx(exact).epsilon(1e-10));
    const IntervalRule e = graded_rule(0.0, sigma, s, 8, 10, Grading::end);
    CHECK(apply(e, [s, sigma](double x) { return std::exp(-(sigma - x) / s); }) == doctest::Approx(exact).epsilon(1e-10));
    const IntervalRule both = graded_rule(0.0, sigma, s, 8, 10, Grading::both);
    CHECK(apply(both, [s, sigma](double x) { return std::exp(-x / s) + std::exp(-(sigma - x) / s); }) ==
          doctest::Approx(2 * exact).epsilon(1e-10));
  }
}

TEST_CASE("layer strip rule integrates the Gaussian layer profile") {
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const double sigma = 0.02;
    // int_0^sigma exp(-x^2/(4 eps)) dx = sqrt(pi eps) erf(sigma / (2 sqrt eps))
    const double exact = std::sqrt(M_PI * eps) * std::erf(sigma / (2.0 * std::sqrt(eps)));
    const IntervalRule r = layer_strip_rule(eps, sigma);
    CHECK(apply(r, [eps](double x) { return std::exp(-x * x / (4 * eps)); }) == doctest::Approx(exact).epsilon(1e-10));
    double wsum = 0.0;
    for (double w : r.weights) {
      CHECK(w > 0.0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(sigma).epsilon(1e-13));
  }
  CHECK_THROWS_AS(layer_strip_rule(1e-4, 0.0), std::invalid_argument);
}

TEST_CASE("adaptive integration agrees with Simpson") {
  auto f = [](double x) { return std::sin(10 * x) * std::exp(-x); };
  CHECK(integrate_adaptive(f, 0.0, 3.0, 1e-12) == doctest::Approx(testutil::simpson(f, 0.0, 3.0, 200000)).epsilon(1e-10));
  // kink handled through a breakpoint
  auto g = [](double x) { return std::abs(x - 0.3); };
  CHECK(integrate_adaptive(g, 0.0, 1.0, 1e-13, {0.3}) == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-13));
  CHECK(integrate_adaptive(f, 1.0, 1.0) == 0.0);
  CHECK(integrate_adaptive(f, 3.0, 0.0, 1e-12) == doctest::Approx(-integrate_adaptive(f, 0.0, 3.0, 1e-12)));
}
