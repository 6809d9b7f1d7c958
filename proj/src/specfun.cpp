#include "blfem/specfun.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace blfem {

void SpecialFunctionConfig::validate() const {
  if (!(series_tolerance > 0.0)) {
    throw std::invalid_argument("series_tolerance must be positive");
  }
  if (!(asymptotic_switch > 0.0)) {
    throw std::invalid_argument("asymptotic_switch must be positive");
  }
}

double erf_paper(double z) { return std::erf(z / std::numbers::sqrt2); }

double erfc_paper(double z) { return std::erfc(z / std::numbers::sqrt2); }

namespace {

// Power series sum_k (x/2)^(2k+order) / (k! (k+order)!) scaled by exp(-x).
// All terms are positive, so the relative error stays at rounding level.
double scaled_power_series(double x, int order, double tol) {
  const double q = 0.25 * x * x;
  double term = (order == 0) ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + order));
    sum += term;
    if (term < tol * sum) break;
  }
  return sum * std::exp(-x);
}

// Large-x expansion of exp(-x) I_nu(x):
//   1/sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k,
//   a_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (8 j).
// For nu = 0, 1 the signs combine so the series is summed until the terms
// stop decreasing (optimal truncation).
double scaled_asymptotic(double x, int order, double tol) {
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < tol * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

double scaled_bessel(double x, int order, const SpecialFunctionConfig& config) {
  config.validate();
  if (!(x >= 0.0)) {
    throw std::domain_error("scaled modified Bessel function requires x >= 0");
  }
  if (x <= config.asymptotic_switch) {
    return scaled_power_series(x, order, config.series_tolerance);
  }
  return scaled_asymptotic(x, order, config.series_tolerance);
}

}  // namespace

double bessel_i0_scaled(double x, const SpecialFunctionConfig& config) {
  return scaled_bessel(x, 0, config);
}

double bessel_i1_scaled(double x, const SpecialFunctionConfig& config) {
  return scaled_bessel(x, 1, config);
}

}  // namespace blfem
