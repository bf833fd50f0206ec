#pragma once

// Segment-count selection: split a target accuracy for the expected-shortage
// term evenly between the loss linearisation (W regions) and the square-root
// linearisation of the standard deviation (Q segments).

#include <cmath>
#include <stdexcept>
#include <string>

#include "loss.hpp"

namespace sknap {

/// Outcome of select_segments.  e_W and A_max describe the chosen loss
/// partition; delta_Q = sqrt(V_max/Q)/4 is the worst-case deviation of the
/// Q-segment square-root approximation on [0, V_max].
struct ErrorBudget {
  double epsilon = 0.0;
  double c = 0.0;
  double V_max = 0.0;
  double S_max = 0.0;
  int W = 0;
  long long Q = 0;
  double e_W = 0.0;
  double A_max = 0.0;
  double delta_Q = 0.0;
};

/// Thrown when no region count within the cap meets the requested accuracy.
/// reachable_epsilon reports the smallest accuracy the cap supports.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double reachable)
      : std::runtime_error(what), reachable_epsilon(reachable) {}
  double reachable_epsilon;
};

/// Smallest W with c * S_max * e_W <= epsilon/2, then smallest Q with
/// c * (A_max + e_W) * delta_Q <= epsilon/2.  V_max bounds the variance
/// reachable by any feasible selection; c is the shortage cost rate.
inline ErrorBudget select_segments(double epsilon, double c, double V_max,
                                   LossCache& cache, int W_cap = 128,
                                   long long Q_cap = 100000) {
  if (!(epsilon > 0.0) || !(c > 0.0) || !(V_max > 0.0)) {
    throw std::invalid_argument(
        "select_segments: epsilon, c and V_max must be positive");
  }
  ErrorBudget out;
  out.epsilon = epsilon;
  out.c = c;
  out.V_max = V_max;
  out.S_max = std::sqrt(V_max);

  const double half = 0.5 * epsilon;
  const double w_threshold = half / (c * out.S_max);
  int W = 0;
  for (int cand = 1; cand <= W_cap; ++cand) {
    if (cache.get(cand).max_error <= w_threshold) {
      W = cand;
      break;
    }
  }
  if (W == 0) {
    const double reachable =
        2.0 * c * out.S_max * cache.get(W_cap).max_error;
    throw BudgetError("select_segments: W cap " + std::to_string(W_cap) +
                          " cannot reach epsilon " + std::to_string(epsilon) +
                          "; smallest reachable epsilon is " +
                          std::to_string(reachable),
                      reachable);
  }
  const LossLinearization& lin = cache.get(W);
  out.W = W;
  out.e_W = lin.max_error;
  out.A_max = partial_mass_sums(lin).A_max;

  // delta_Q <= half / (c*(A_max + e_W))  <=>  Q >= V_max / (16 t^2).
  const double t = half / (c * (out.A_max + out.e_W));
  const auto deviation = [&](long long q) {
    return std::sqrt(V_max / static_cast<double>(q)) / 4.0;
  };
  long long Q = static_cast<long long>(
      std::ceil(V_max / (16.0 * t * t) - 1e-12));
  if (Q < 1) Q = 1;
  while (deviation(Q) > t) ++Q;
  while (Q > 1 && deviation(Q - 1) <= t) --Q;
  if (Q > Q_cap) {
    const double reachable = 2.0 * c * (out.A_max + out.e_W) *
                             deviation(Q_cap);
    throw BudgetError("select_segments: Q cap " + std::to_string(Q_cap) +
                          " cannot reach epsilon " + std::to_string(epsilon) +
                          "; smallest reachable epsilon is " +
                          std::to_string(reachable),
                      reachable);
  }
  out.Q = Q;
  out.delta_Q = deviation(Q);
  return out;
}

}  // namespace sknap
