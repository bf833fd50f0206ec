#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sknap/instance.hpp"
#include "sknap/loss.hpp"
#include "sknap/model.hpp"
#include "sknap/normal.hpp"
#include "sknap/sampling.hpp"
#include "sknap/sim.hpp"
#include "sknap/sskp_pwl.hpp"

namespace sknap {

enum class ShortfallMode { normal_closed_form, mvn_closed_form, monte_carlo };

// Evaluator for the expected capacity shortfall E[max(w'x - C, 0)] and a
// subgradient of it. The Monte-Carlo variant carries its own fixed sample
// matrix so every cut derived from it stays globally valid for the sampled
// approximation throughout one solve.
struct ShortfallOracle {
  ShortfallMode mode = ShortfallMode::normal_closed_form;
  std::vector<double> sample;  // replications x n, row-major (monte_carlo only)
  int replications = 0;
  std::uint64_t seed = 0;
};

inline ShortfallOracle make_normal_oracle(const Instance& inst) {
  inst.validate();
  if (inst.correlated()) {
    throw std::invalid_argument("make_normal_oracle: instance is correlated; use make_mvn_oracle");
  }
  ShortfallOracle o;
  o.mode = ShortfallMode::normal_closed_form;
  return o;
}

inline ShortfallOracle make_mvn_oracle(const Instance& inst) {
  inst.validate();
  if (!inst.correlated()) {
    throw std::invalid_argument("make_mvn_oracle: instance has no covariance matrix");
  }
  ShortfallOracle o;
  o.mode = ShortfallMode::mvn_closed_form;
  return o;
}

// Stratified common-random-number sample, drawn once and kept for the
// oracle's lifetime.
inline ShortfallOracle make_mc_oracle(const Instance& inst, std::uint64_t seed,
                                      int replications = 1000) {
  inst.validate();
  if (replications < 1) {
    throw std::invalid_argument("make_mc_oracle: replications must be >= 1");
  }
  ShortfallOracle o;
  o.mode = ShortfallMode::monte_carlo;
  o.replications = replications;
  o.seed = seed;
  const SampleStream stream(seed, replications, inst.n);
  o.sample = draw_weight_matrix(inst, stream);
  return o;
}

struct ShortfallEval {
  double value = 0.0;
  std::vector<double> gradient;
};

inline ShortfallEval shortfall_and_subgradient(const ShortfallOracle& oracle,
                                               const std::vector<double>& x,
                                               const Instance& inst) {
  const auto n = static_cast<std::size_t>(inst.n);
  if (x.size() < n) {
    throw std::invalid_argument("shortfall_and_subgradient: point has too few components");
  }
  ShortfallEval out;
  out.gradient.assign(n, 0.0);

  if (oracle.mode == ShortfallMode::monte_carlo) {
    if (oracle.sample.size() != static_cast<std::size_t>(oracle.replications) * n) {
      throw std::invalid_argument("shortfall_and_subgradient: oracle sample shape mismatch");
    }
    // Sample average of the convex function max(w'x - C, 0); the indicator
    // with strict > picks the right-derivative at kinks.
    double total = 0.0;
    for (int r = 0; r < oracle.replications; ++r) {
      const double* row = oracle.sample.data() + static_cast<std::size_t>(r) * n;
      double load = 0.0;
      for (std::size_t i = 0; i < n; ++i) load += row[i] * x[i];
      if (load > inst.capacity) {
        total += load - inst.capacity;
        for (std::size_t i = 0; i < n; ++i) out.gradient[i] += row[i];
      }
    }
    const double inv = 1.0 / static_cast<double>(oracle.replications);
    out.value = total * inv;
    for (double& g : out.gradient) g *= inv;
    return out;
  }

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += inst.mu[i] * x[i];
  double var = 0.0;
  std::vector<double> dvar(n, 0.0);
  if (oracle.mode == ShortfallMode::mvn_closed_form) {
    if (!inst.correlated()) {
      throw std::invalid_argument("shortfall_and_subgradient: mvn oracle needs a covariance matrix");
    }
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += inst.cov[i * n + j] * x[j];
      dvar[i] = 2.0 * row;  // d(x'Sigma x)/dx_i
      var += row * x[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double s2 = inst.sigma[i] * inst.sigma[i];
      dvar[i] = s2;  // linear variance: exact at binary points
      var += s2 * x[i];
    }
  }

  if (var <= 1e-12) {
    // Deterministic fallback.
    out.value = std::max(mean - inst.capacity, 0.0);
    if (mean > inst.capacity) {
      for (std::size_t i = 0; i < n; ++i) out.gradient[i] = inst.mu[i];
    }
    return out;
  }

  const double sd = std::sqrt(var);
  const double y = (inst.capacity - mean) / sd;
  out.value = sd * standard_loss(y);
  const double tail = norm::sf(y);       // 1 - Phi(y)
  const double dens = norm::pdf(y);
  for (std::size_t i = 0; i < n; ++i) {
    out.gradient[i] = inst.mu[i] * tail + dens * dvar[i] / (2.0 * sd);
  }
  return out;
}

namespace lc_detail {

inline void check_mode(const Instance& inst, const ShortfallOracle& oracle) {
  switch (oracle.mode) {
    case ShortfallMode::normal_closed_form:
      if (inst.correlated() || inst.distribution != "normal") {
        throw std::invalid_argument("solve_lc: normal oracle needs an independent normal instance");
      }
      break;
    case ShortfallMode::mvn_closed_form:
      if (!inst.correlated()) {
        throw std::invalid_argument("solve_lc: mvn oracle needs a correlated instance");
      }
      break;
    case ShortfallMode::monte_carlo:
      if (oracle.sample.size() !=
          static_cast<std::size_t>(oracle.replications) * static_cast<std::size_t>(inst.n)) {
        throw std::invalid_argument("solve_lc: monte-carlo oracle sample does not match the instance");
      }
      break;
  }
}

// Epigraph master: max values'x - c*theta with lazily generated supporting
// cuts theta >= q + g'(x - x_hat). Selections occupy variables 0..n-1 and
// theta sits at index n of the returned solution vector.
inline MilpModel build_master(const Instance& inst, const ShortfallOracle& oracle) {
  MilpModel m;
  const auto n = static_cast<std::size_t>(inst.n);
  for (std::size_t i = 0; i < n; ++i) {
    m.add_binary("x" + std::to_string(i));
    m.set_objective_coefficient(static_cast<int>(i), inst.values[i]);
  }
  const int theta = m.add_continuous("theta", 0.0, std::numeric_limits<double>::infinity());
  m.set_objective_coefficient(theta, -inst.shortage_cost);
  m.set_maximize(true);

  const Instance data = inst;       // the lambdas outlive the caller's frame
  const ShortfallOracle orc = oracle;
  m.add_cut_oracle([data, orc, n, theta](const std::vector<double>& point) {
    std::vector<ModelCut> cuts;
    const ShortfallEval e = shortfall_and_subgradient(orc, point, data);
    const double theta_hat = point[static_cast<std::size_t>(theta)];
    if (theta_hat >= e.value - 1e-6) return cuts;
    ModelCut cut;
    cut.sense = '>';
    double rhs = e.value;
    cut.coef.emplace_back(theta, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (e.gradient[i] != 0.0) cut.coef.emplace_back(static_cast<int>(i), -e.gradient[i]);
      rhs -= e.gradient[i] * point[i];
    }
    cut.rhs = rhs;
    cuts.push_back(std::move(cut));
    return cuts;
  });
  m.set_incumbent_completer([data, orc, n, theta](const std::vector<double>& x,
                                                  std::vector<double>& completed) {
    completed = x;
    for (std::size_t i = 0; i < n; ++i) completed[i] = completed[i] > 0.5 ? 1.0 : 0.0;
    const ShortfallEval e = shortfall_and_subgradient(orc, completed, data);
    completed[static_cast<std::size_t>(theta)] = e.value;
    return true;
  });
  return m;
}

}  // namespace lc_detail

inline Solution solve_lc(const Instance& inst, const ShortfallOracle& oracle,
                         double rel_tol = 1e-6, double time_limit = 600.0) {
  inst.validate();
  lc_detail::check_mode(inst, oracle);
  const MilpModel m = lc_detail::build_master(inst, oracle);
  return solve(m, rel_tol, time_limit);
}

// As solve_lc, but seeds the incumbent from a caller-supplied selection
// (typically a coarse piecewise-linear solution).
inline Solution solve_lc_warm(const Instance& inst, const ShortfallOracle& oracle,
                              const std::vector<double>& x0, double rel_tol = 1e-6,
                              double time_limit = 600.0) {
  inst.validate();
  lc_detail::check_mode(inst, oracle);
  if (x0.size() != static_cast<std::size_t>(inst.n)) {
    throw std::invalid_argument("solve_lc_warm: warm-start selection has the wrong length");
  }
  const MilpModel m = lc_detail::build_master(inst, oracle);
  std::vector<double> start(static_cast<std::size_t>(inst.n) + 1, 0.0);
  for (std::size_t i = 0; i < x0.size(); ++i) start[i] = x0[i] > 0.5 ? 1.0 : 0.0;
  const ShortfallEval e = shortfall_and_subgradient(oracle, start, inst);
  start[static_cast<std::size_t>(inst.n)] = e.value;
  return solve_with_warm_start(m, start, rel_tol, time_limit);
}

struct NormalApproxResult {
  BracketResult bracket;   // solved on the moment-matched normal counterpart
  SimReport evaluation;    // the selection re-evaluated under the true law
};

// Replace a gamma or lognormal instance by the normal with the same mean and
// standard deviation per weight, solve the piecewise-linear bracket, and
// price the resulting selection under the original distribution.
inline NormalApproxResult normal_approx_heuristic(const Instance& inst,
                                                  const BracketConfig& cfg = {}) {
  inst.validate();
  if (inst.distribution != "gamma" && inst.distribution != "lognormal") {
    throw std::invalid_argument(
        "normal_approx_heuristic: instance must be gamma or lognormal distributed");
  }
  Instance counterpart = inst;
  counterpart.distribution = "normal";
  NormalApproxResult out;
  out.bracket = solve_bracket(counterpart, cfg);
  if (!out.bracket.x.empty()) {
    out.evaluation = evaluate_static(out.bracket.x, inst, cfg.sim_seed, cfg.sim_runs);
  }
  return out;
}

}  // namespace sknap
