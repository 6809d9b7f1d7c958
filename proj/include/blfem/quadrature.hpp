#pragma once

#include <array>
#include <functional>
#include <vector>

namespace blfem {

/// Rule on an interval. Points and weights are in absolute coordinates of
/// the interval the rule was built for ([0, 1] for gauss_interval).
struct IntervalRule {
  std::vector<double> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  std::size_t size() const { return points.size(); }
  // Affine image of this rule (defined on [0, 1]) on [a, b].
  IntervalRule mapped(double a, double b) const;
};

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
/// Points are barycentric (l0, l1, l2) with Cartesian image (l1, l2).
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre rule with n_points nodes on [0, 1], 1 <= n_points <= 64.
IntervalRule gauss_interval(int n_points);

/// Triangle rule exact for polynomials of the requested total degree (1..10).
TriangleRule gauss_triangle(int degree);

/// Which end(s) of an interval a graded rule refines toward.
enum class Grading { start, end, both };

/// Composite rule resolving a feature of width `scale` at one or both ends of
/// [a, b]: n_sub uniform sub-intervals across the first min(L, 8 scale), then
/// n_sub geometrically growing sub-intervals for the rest; n_gauss points each.
IntervalRule graded_rule(double a, double b, double scale, int n_sub, int n_gauss,
                         Grading grading = Grading::start);

/// Composite rule on [0, sigma] for integrands varying on the sqrt(eps) scale
/// at xi = 0 (the boundary layer); first sub-interval width is at most
/// min(sqrt(4 eps), sigma / n_sub).
IntervalRule layer_strip_rule(double epsilon, double sigma, int n_sub = 8, int n_gauss = 10);

/// Adaptive Gauss-Legendre integration by interval bisection until the
/// absolute error estimate is below abs_tol. `breakpoints` (inside (a, b))
/// seed the initial partition.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol = 1e-12, const std::vector<double>& breakpoints = {});

}  // namespace blfem
