#pragma once

// Standard normal pdf/cdf/quantile with pinned, build-independent accuracy.
//
// Thresholds, alpha levels and file outputs must reproduce bit-for-bit given
// the same approximation, so we do not rely on libm's erf/erfc (whose accuracy
// and rounding are implementation-defined). Instead:
//   - norm_cdf uses Cody's rational Chebyshev approximation of erfc
//     (W. J. Cody, Math. Comp. 23, 1969; the CALERF coefficient set),
//     |relative error| < 1e-15 over the finite range, well inside the 1e-12 target.
//   - norm_cdf_inv uses Wichura's algorithm AS 241 (PPND16), |error| ~ 1e-15,
//     inside the 1e-9 target.

namespace abplan::math {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2*pi)

// Standard normal density.
double norm_pdf(double x);

// erf/erfc, Cody rational approximation.
double erf_cody(double x);
double erfc_cody(double x);

// P(Z <= x) for Z ~ N(0,1).
double norm_cdf(double x);

// P(Z > x); keeps relative accuracy in the upper tail.
double norm_sf(double x);

// Quantile: x with norm_cdf(x) = p, p in (0,1). AS 241.
// Throws ValidationError outside (0,1).
double norm_cdf_inv(double p);

}  // namespace abplan::math
