#pragma once

namespace blfem {

struct SpecialFunctionConfig {
  double series_tolerance = 1e-14;
  // Above this argument the scaled Bessel functions use the large-x expansion.
  double asymptotic_switch = 20.0;

  void validate() const;
};

// Error function with the exp(-y^2/2) kernel:
//   erf_paper(z) = sqrt(2/pi) * int_0^z exp(-y^2/2) dy = erf(z / sqrt(2)).
// Every layer formula in this library uses this convention; the conversion to
// the standard error function happens only here.
double erf_paper(double z);

// 1 - erf_paper(z), evaluated without cancellation for large positive z.
double erfc_paper(double z);

// exp(-x) * I0(x) for x >= 0. Finite for arguments far beyond the overflow
// point of I0 itself, so ratios I0(a)/I0(b) can be formed as
//   bessel_i0_scaled(a) / bessel_i0_scaled(b) * exp(a - b).
double bessel_i0_scaled(double x, const SpecialFunctionConfig& config = {});

// exp(-x) * I1(x) for x >= 0; needed for exact radial gradients.
double bessel_i1_scaled(double x, const SpecialFunctionConfig& config = {});

}  // namespace blfem
