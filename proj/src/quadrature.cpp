#include "blfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace blfem {

namespace {

// Newton iteration on the three-term recurrence of the Legendre polynomials.
IntervalRule compute_gauss(int n) {
  IntervalRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  rule.exactness_degree = 2 * n - 1;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1, 1] -> [0, 1]
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.5;
  return rule;
}

const IntervalRule& cached_gauss(int n) {
  static const std::vector<IntervalRule> table = [] {
    std::vector<IntervalRule> t(65);
    t[1] = IntervalRule{{0.5}, {1.0}, 1};
    for (int k = 2; k <= 64; ++k) t[k] = compute_gauss(k);
    return t;
  }();
  return table[n];
}

void add_permutations(TriangleRule& rule, double a, double b, double weight) {
  // all distinct permutations of (a, b, b) with a != b
  const double w = 0.5 * weight;
  rule.points.push_back({a, b, b});
  rule.points.push_back({b, a, b});
  rule.points.push_back({b, b, a});
  rule.weights.insert(rule.weights.end(), 3, w);
}

TriangleRule collapsed_rule(int degree) {
  const int n = (degree + 3) / 2;
  const IntervalRule& g = cached_gauss(n);
  TriangleRule rule;
  rule.exactness_degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = g.points[i];
      const double t = g.points[j];
      const double x = s * (1.0 - t);
      const double y = t;
      rule.points.push_back({1.0 - x - y, x, y});
      rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - t));
    }
  }
  return rule;
}

std::vector<double> geometric_breaks(double a, double b, double first, int n) {
  const double length = b - a;
  std::vector<double> breaks{a};
  if (first * n >= length) {
    for (int k = 1; k <= n; ++k) breaks.push_back(a + length * k / n);
    breaks.back() = b;
    return breaks;
  }
  // solve first * (q^n - 1) / (q - 1) = length for q > 1 by bisection
  auto total = [&](double q) { return first * (std::pow(q, n) - 1.0) / (q - 1.0); };
  double lo = 1.0 + 1e-12;
  double hi = 2.0;
  while (total(hi) < length) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < length ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  double width = first;
  double x = a;
  for (int k = 0; k < n; ++k) {
    x += width;
    breaks.push_back(x);
    width *= q;
  }
  breaks.back() = b;
  return breaks;
}

void append_composite(IntervalRule& rule, const std::vector<double>& breaks, int n_gauss) {
  const IntervalRule& g = cached_gauss(n_gauss);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k];
    const double width = breaks[k + 1] - lo;
    for (std::size_t q = 0; q < g.size(); ++q) {
      rule.points.push_back(lo + width * g.points[q]);
      rule.weights.push_back(width * g.weights[q]);
    }
  }
}

std::vector<double> graded_breaks(double a, double b, double scale, int n_sub) {
  const double length = b - a;
  const double zone = std::min(length, 8.0 * scale);
  std::vector<double> breaks;
  for (int k = 0; k <= n_sub; ++k) breaks.push_back(a + zone * k / n_sub);
  if (zone < length) {
    const auto tail = geometric_breaks(a + zone, b, zone / n_sub, n_sub);
    breaks.insert(breaks.end(), tail.begin() + 1, tail.end());
  } else {
    breaks.back() = b;
  }
  return breaks;
}

}  // namespace

IntervalRule IntervalRule::mapped(double a, double b) const {
  IntervalRule out;
  out.exactness_degree = exactness_degree;
  out.points.reserve(size());
  out.weights.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out.points.push_back(a + (b - a) * points[i]);
    out.weights.push_back((b - a) * weights[i]);
  }
  return out;
}

IntervalRule gauss_interval(int n_points) {
  if (n_points < 1 || n_points > 64) {
    throw std::invalid_argument("Gauss-Legendre point count must be in [1, 64], got " +
                                std::to_string(n_points));
  }
  return cached_gauss(n_points);
}

TriangleRule gauss_triangle(int degree) {
  if (degree < 1 || degree > 10) {
    throw std::invalid_argument("triangle rule degree must be in [1, 10], got " + std::to_string(degree));
  }
  TriangleRule rule;
  switch (degree) {
    case 1:
      rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
      rule.weights.push_back(0.5);
      rule.exactness_degree = 1;
      return rule;
    case 2:
      add_permutations(rule, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
      rule.exactness_degree = 2;
      return rule;
    case 3:
    case 4:
      // Dunavant, 6 points
      add_permutations(rule, 0.108103018168070, 0.445948490915965, 0.223381589678011);
      add_permutations(rule, 0.816847572980459, 0.091576213509771, 0.109951743655322);
      rule.exactness_degree = 4;
      return rule;
    case 5:
      // Dunavant, 7 points
      rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
      rule.weights.push_back(0.5 * 0.225);
      add_permutations(rule, 0.059715871789770, 0.470142064105115, 0.132394152788506);
      add_permutations(rule, 0.797426985353087, 0.101286507323456, 0.125939180544827);
      rule.exactness_degree = 5;
      return rule;
    default:
      return collapsed_rule(degree);
  }
}

IntervalRule graded_rule(double a, double b, double scale, int n_sub, int n_gauss, Grading grading) {
  if (!(b > a)) throw std::invalid_argument("graded_rule needs a < b");
  if (!(scale > 0.0)) throw std::invalid_argument("graded_rule needs a positive scale");
  if (n_sub < 1) throw std::invalid_argument("graded_rule needs n_sub >= 1");
  if (n_gauss < 1 || n_gauss > 64) throw std::invalid_argument("graded_rule: bad n_gauss");

  IntervalRule rule;
  rule.exactness_degree = 2 * n_gauss - 1;
  switch (grading) {
    case Grading::start:
      append_composite(rule, graded_breaks(a, b, scale, n_sub), n_gauss);
      break;
    case Grading::end: {
      // mirror of the start-graded partition
      auto breaks = graded_breaks(0.0, b - a, scale, n_sub);
      std::vector<double> mirrored;
      for (auto it = breaks.rbegin(); it != breaks.rend(); ++it) mirrored.push_back(b - *it);
      mirrored.front() = a;
      append_composite(rule, mirrored, n_gauss);
      break;
    }
    case Grading::both: {
      const double mid = 0.5 * (a + b);
      IntervalRule left = graded_rule(a, mid, scale, n_sub, n_gauss, Grading::start);
      IntervalRule right = graded_rule(mid, b, scale, n_sub, n_gauss, Grading::end);
      rule.points = std::move(left.points);
      rule.weights = std::move(left.weights);
      rule.points.insert(rule.points.end(), right.points.begin(), right.points.end());
      rule.weights.insert(rule.weights.end(), right.weights.begin(), right.weights.end());
      break;
    }
  }
  return rule;
}

IntervalRule layer_strip_rule(double epsilon, double sigma, int n_sub, int n_gauss) {
  if (!(sigma > 0.0)) throw std::invalid_argument("layer_strip_rule needs sigma > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("layer_strip_rule needs epsilon > 0");
  if (n_sub < 2) throw std::invalid_argument("layer_strip_rule needs n_sub >= 2");
  return graded_rule(0.0, sigma, std::sqrt(4.0 * epsilon), n_sub, n_gauss, Grading::start);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                          const std::vector<double>& breakpoints) {
  if (a == b) return 0.0;
  if (b < a) return -integrate_adaptive(f, b, a, abs_tol, breakpoints);

  const IntervalRule& g = cached_gauss(10);
  auto gauss = [&](double lo, double hi) {
    double s = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) s += g.weights[q] * f(lo + (hi - lo) * g.points[q]);
    return s * (hi - lo);
  };

  struct Segment {
    double lo, hi, estimate;
    int depth;
  };
  std::vector<double> edges{a};
  for (double p : breakpoints) {
    if (p > a && p < b) edges.push_back(p);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());

  std::vector<Segment> stack;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (edges[k + 1] > edges[k]) stack.push_back({edges[k], edges[k + 1], gauss(edges[k], edges[k + 1]), 0});
  }
  const double total = b - a;
  double result = 0.0;
  while (!stack.empty()) {
    Segment s = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (s.lo + s.hi);
    const double left = gauss(s.lo, mid);
    const double right = gauss(mid, s.hi);
    const double refined = left + right;
    const double local_tol = std::max(abs_tol * (s.hi - s.lo) / total, 1e-300);
    if (std::abs(refined - s.estimate) <= local_tol || s.depth >= 60) {
      result += refined;
    } else {
      stack.push_back({s.lo, mid, left, s.depth + 1});
      stack.push_back({mid, s.hi, right, s.depth + 1});
    }
  }
  return result;
}

}  // namespace blfem
