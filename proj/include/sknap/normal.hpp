#pragma once

// Standard-normal density, distribution, survival and quantile functions.
// All routines are deterministic scalar math with no global state.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sknap::norm {

inline constexpr double inv_sqrt_2pi = 0.39894228040143267794;
inline constexpr double sqrt_2 = 1.41421356237309504880;

/// Density of N(0,1).
inline double pdf(double x) {
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Distribution function of N(0,1), accurate in both tails.
inline double cdf(double x) {
  return 0.5 * std::erfc(-x / sqrt_2);
}

/// Survival function 1 - cdf(x), computed without cancellation.
inline double sf(double x) {
  return 0.5 * std::erfc(x / sqrt_2);
}

namespace detail {

// Rational initial guess for the quantile (relative error ~1e-9),
// refined below by one Halley step on the cdf.
inline double quantile_guess(double p) {
  static constexpr double a[6] = {
      -3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
      1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {
      -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[6] = {
      -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace detail

/// Quantile (inverse cdf) of N(0,1).  Throws std::domain_error outside (0,1).
inline double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("norm::quantile: p must lie in (0,1)");
  }
  double x = detail::quantile_guess(p);
  // Halley refinement through whichever tail is well conditioned; skipped
  // only where the tail probability itself underflows.
  const int steps = std::abs(x) > 30.0 ? 2 : 1;
  for (int i = 0; i < steps; ++i) {
    const double d = pdf(x);
    if (d < 1e-305) break;
    const double e = (x <= 0.0) ? cdf(x) - p : (1.0 - p) - sf(x);
    const double u = e / d;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace sknap::norm
