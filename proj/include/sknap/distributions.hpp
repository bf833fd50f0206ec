#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sknap/normal.hpp"

namespace sknap::dist {

struct GammaParams {
  double shape = 1.0;
  double scale = 1.0;
};

struct LognormalParams {
  double mu_log = 0.0;
  double sigma_log = 1.0;
};

// Moment parameterisation: mean = k*theta, cv^2 = 1/k.
inline GammaParams gamma_from_moments(double mean, double cv) {
  if (!(mean > 0.0) || !(cv > 0.0)) {
    throw std::invalid_argument(
        "gamma_from_moments: mean and cv must be positive");
  }
  const double cv2 = cv * cv;
  return {1.0 / cv2, mean * cv2};
}

// Moment parameterisation: sigma_log^2 = ln(1+cv^2),
// mu_log = ln(mean) - sigma_log^2 / 2.
inline LognormalParams lognormal_from_moments(double mean, double cv) {
  if (!(mean > 0.0) || !(cv > 0.0)) {
    throw std::invalid_argument(
        "lognormal_from_moments: mean and cv must be positive");
  }
  const double s2 = std::log1p(cv * cv);
  return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

namespace detail {

// Power series for the regularised lower incomplete gamma (x < a+1).
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 600; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for the regularised upper tail (x >= a+1).
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 600; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Regularised lower incomplete gamma P(a,x): the CDF at x of a
// Gamma(shape=a, scale=1) variate.
inline double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma_p: shape must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// Regularised upper incomplete gamma Q(a,x) = 1 - P(a,x), computed directly
// in the tail so deep-tail values keep full relative precision.
inline double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma_q: shape must be positive");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Density of Gamma(shape=a, scale=1), evaluated in log space.
inline double gamma_pdf(double x, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma_pdf: shape must be positive");
  if (x <= 0.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
}

// Inverse CDF of Gamma(shape, scale): Wilson-Hilferty initial guess refined
// by Newton steps on P(a,x) - p with a bisection safeguard.
inline double gamma_quantile(double p, double shape, double scale) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("gamma_quantile: p must lie in (0,1)");
  }
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument("gamma_quantile: shape and scale must be positive");
  }
  const double a = shape;
  const double z = norm::quantile(p);
  const double t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
  double x = a * t * t * t;
  if (!(x > 0.0) || a < 0.5) {
    // Small-shape fallback: invert the leading series term P ~ x^a / Gamma(a+1).
    x = std::exp((std::log(p) + std::lgamma(a + 1.0)) / a);
    if (!(x > 0.0)) x = 1e-300;
  }
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  // For p past the median, iterate on the upper tail Q(a,x) - (1-p); the
  // subtraction 1-p is exact there, so tail quantiles stay accurate where
  // P(a,x) itself saturates near 1.
  const bool use_tail = p > 0.5;
  const double pc = 1.0 - p;
  for (int it = 0; it < 120; ++it) {
    const double err = use_tail ? pc - gamma_q(a, x) : gamma_p(a, x) - p;
    if (err > 0.0) {
      hi = x;
    } else if (err < 0.0) {
      lo = x;
    } else {
      break;
    }
    const double f = gamma_pdf(x, a);
    double next = x;
    if (f > 1e-300) next = x - err / f;
    if (!(next > lo) || !(next < hi)) {
      next = std::isinf(hi) ? x * 2.0 : 0.5 * (lo + hi);
    }
    if (std::abs(next - x) <= 1e-15 * std::abs(x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x * scale;
}

inline double gamma_quantile(double p, const GammaParams& g) {
  return gamma_quantile(p, g.shape, g.scale);
}

inline double lognormal_quantile(double p, const LognormalParams& lp) {
  return std::exp(lp.mu_log + lp.sigma_log * norm::quantile(p));
}

// Convenience overloads working directly from (mean, cv).
inline double gamma_quantile_mc(double p, double mean, double cv) {
  return gamma_quantile(p, gamma_from_moments(mean, cv));
}

inline double lognormal_quantile_mc(double p, double mean, double cv) {
  return lognormal_quantile(p, lognormal_from_moments(mean, cv));
}

inline double normal_quantile_mc(double p, double mean, double sd) {
  if (!(sd >= 0.0)) throw std::invalid_argument("normal_quantile_mc: sd must be >= 0");
  if (sd == 0.0) return mean;
  return mean + sd * norm::quantile(p);
}

}  // namespace sknap::dist
