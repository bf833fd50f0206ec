#pragma once

// Piecewise-linear bounds on sqrt(v) over [0, V_max] on a uniform grid.
// Chords of a concave function lie below it, so the chord interpolant is a
// lower bound; shifting it up by the worst-case gap sqrt(step)/4 (attained
// at v = step/4 in the first segment) gives an upper bound.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sknap {

enum class SqrtBoundKind { lower, upper };

struct SqrtPwl {
  double step = 0.0;
  double v_max = 0.0;
  long long q = 0;  // number of segments; grid covers [0, q*step]
  double shift = 0.0;
  SqrtBoundKind kind = SqrtBoundKind::lower;
  std::vector<double> slope;  // slope[k] on (breakpoint(k), breakpoint(k+1)]

  double breakpoint(long long k) const { return static_cast<double>(k) * step; }

  /// Value of the bound at v.  Throws std::domain_error outside [0, V_max].
  double eval(double v) const {
    const double tol = 1e-9 * std::max(1.0, v_max);
    if (v < -tol || v > v_max + tol) {
      throw std::domain_error("SqrtPwl::eval: v=" + std::to_string(v) +
                              " outside [0, " + std::to_string(v_max) + "]");
    }
    double clamped = std::min(std::max(v, 0.0), breakpoint(q));
    auto k = static_cast<long long>(clamped / step);
    if (k >= q) k = q - 1;
    const double b = breakpoint(k);
    return shift + std::sqrt(b) + slope[static_cast<std::size_t>(k)] *
                                      (clamped - b);
  }
};

/// Build a Q = ceil(V_max/step) segment bound of the requested kind.
/// Requires 0 < step <= V_max and Q within segment_cap.
inline SqrtPwl build_sqrt_pwl(double v_max, double step, SqrtBoundKind kind,
                              long long segment_cap = 100000) {
  if (!(v_max > 0.0) || !(step > 0.0)) {
    throw std::invalid_argument("build_sqrt_pwl: v_max and step must be > 0");
  }
  if (step > v_max) {
    throw std::invalid_argument(
        "build_sqrt_pwl: step must not exceed v_max");
  }
  SqrtPwl f;
  f.step = step;
  f.v_max = v_max;
  f.q = static_cast<long long>(std::ceil(v_max / step - 1e-12));
  if (f.q < 1) f.q = 1;
  if (f.q > segment_cap) {
    throw std::invalid_argument("build_sqrt_pwl: " + std::to_string(f.q) +
                                " segments exceed the cap of " +
                                std::to_string(segment_cap));
  }
  f.kind = kind;
  f.shift = (kind == SqrtBoundKind::upper) ? 0.25 * std::sqrt(step) : 0.0;
  f.slope.resize(static_cast<std::size_t>(f.q));
  double prev = 0.0;
  for (long long k = 1; k <= f.q; ++k) {
    const double cur = std::sqrt(static_cast<double>(k) * step);
    f.slope[static_cast<std::size_t>(k - 1)] = (cur - prev) / step;
    prev = cur;
  }
  return f;
}

/// Same grid, with exactly `segments` pieces (step = V_max/segments).
inline SqrtPwl build_sqrt_pwl_segments(double v_max, long long segments,
                                       SqrtBoundKind kind,
                                       long long segment_cap = 100000) {
  if (segments < 1) {
    throw std::invalid_argument(
        "build_sqrt_pwl_segments: segments must be >= 1");
  }
  return build_sqrt_pwl(v_max, v_max / static_cast<double>(segments), kind,
                        segment_cap);
}

/// Step chosen as a fraction of V_max (normalised-domain variant): the gap
/// scales with sqrt(V_max) instead of being absolute.
inline SqrtPwl build_sqrt_pwl_normalised(double v_max, double step_fraction,
                                         SqrtBoundKind kind,
                                         long long segment_cap = 100000) {
  if (!(step_fraction > 0.0) || step_fraction > 1.0) {
    throw std::invalid_argument(
        "build_sqrt_pwl_normalised: step_fraction must lie in (0, 1]");
  }
  return build_sqrt_pwl(v_max, step_fraction * v_max, kind, segment_cap);
}

}  // namespace sknap
