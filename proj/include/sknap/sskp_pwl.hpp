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
#include "sknap/linalg.hpp"
#include "sknap/loss.hpp"
#include "sknap/model.hpp"
#include "sknap/sim.hpp"
#include "sknap/sqrt_pwl.hpp"

namespace sknap {

// Which side of the shortfall sandwich a model enforces. The Jensen variant
// under-estimates the expected shortfall (upper objective bound); the
// Edmundson-Madanski variant over-estimates it (lower objective bound).
enum class BoundKind { jensen, edmundson_madanski };

struct PwlModelVars {
  std::vector<int> x;  // binary selections
  int m = -1;          // selected mean weight
  int v = -1;          // selected weight variance
  int s = -1;          // PWL image of sqrt(V)
  int p = -1;          // expected capacity shortfall
};

struct PwlModel {
  MilpModel model;
  PwlModelVars vars;
};

namespace pwl_detail {

inline double infinity() { return std::numeric_limits<double>::infinity(); }

// Zero covariance entries below the significance threshold.
inline std::vector<double> filtered_covariance(const Instance& inst) {
  std::vector<double> cov = inst.cov;
  for (double& v : cov) {
    if (std::abs(v) < 1e-6) v = 0.0;
  }
  return cov;
}

struct CoreData {
  std::vector<double> mu;
  std::vector<double> prob_tail;   // B_i
  std::vector<double> mass_tail;   // A_i
  double e_shift = 0.0;            // e_W for the over-estimating variant
  double capacity = 0.0;
  double cost = 0.0;
  SqrtPwl sqp;
};

// Shared skeleton: variables, mean row, sqrt PWL equality, shortfall rows,
// objective, and an incumbent completer that turns any binary point into an
// exactly feasible solution. The variance definition is left to the caller.
inline PwlModel build_core(const Instance& inst, const LossLinearization& lin,
                           const SqrtPwl& sqp, BoundKind kind, double v_max) {
  if (!(sqp.v_max >= v_max - 1e-9 * std::max(1.0, v_max))) {
    throw std::invalid_argument("build_pwl_model: sqrt grid does not cover the variance range");
  }
  const bool over = kind == BoundKind::edmundson_madanski;
  if (over && sqp.kind != SqrtBoundKind::upper) {
    throw std::invalid_argument("build_pwl_model: over-estimating variant needs the upper sqrt bound");
  }
  if (!over && sqp.kind != SqrtBoundKind::lower) {
    throw std::invalid_argument("build_pwl_model: under-estimating variant needs the lower sqrt bound");
  }

  PwlModel out;
  MilpModel& m = out.model;
  PwlModelVars& vars = out.vars;

  const int n = inst.n;
  vars.x.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    vars.x[static_cast<std::size_t>(i)] = m.add_binary("x" + std::to_string(i));
  }
  double mu_lo = 0.0;
  double mu_hi = 0.0;
  for (double w : inst.mu) {
    mu_lo += std::min(w, 0.0);
    mu_hi += std::max(w, 0.0);
  }
  vars.m = m.add_continuous("M", mu_lo, mu_hi);
  vars.v = m.add_continuous("V", 0.0, v_max);
  const double s_hi = sqp.eval(sqp.v_max);
  vars.s = m.add_continuous("S", 0.0, s_hi);
  vars.p = m.add_continuous("P", 0.0, infinity());

  // M = x'mu
  {
    std::vector<std::pair<int, double>> coef;
    coef.emplace_back(vars.m, 1.0);
    for (int i = 0; i < n; ++i) {
      coef.emplace_back(vars.x[static_cast<std::size_t>(i)], -inst.mu[static_cast<std::size_t>(i)]);
    }
    m.add_row(std::move(coef), '=', 0.0, "mean");
  }

  // S equals the piecewise-linear sqrt bound of V.
  {
    std::vector<double> bp(static_cast<std::size_t>(sqp.q) + 1);
    std::vector<double> val(static_cast<std::size_t>(sqp.q) + 1);
    for (long long k = 0; k <= sqp.q; ++k) {
      bp[static_cast<std::size_t>(k)] = sqp.breakpoint(k);
      val[static_cast<std::size_t>(k)] = sqp.shift + std::sqrt(sqp.breakpoint(k));
    }
    m.add_pwl_equality(vars.s, vars.v, std::move(bp), std::move(val));
  }

  // Shortfall sandwich: P >= S*A_i - (C - M)*B_i + e*S for every region,
  // plus the empty-region floor P >= e*S.
  const PartialMassSums sums = partial_mass_sums(lin);
  const double e_shift = over ? lin.max_error : 0.0;
  for (int i = 0; i < lin.W; ++i) {
    const double a = sums.A[static_cast<std::size_t>(i)];
    const double b = sums.B[static_cast<std::size_t>(i)];
    m.add_row({{vars.p, 1.0}, {vars.s, -(a + e_shift)}, {vars.m, -b}}, '>',
              -inst.capacity * b, "shortfall" + std::to_string(i));
  }
  m.add_row({{vars.p, 1.0}, {vars.s, -e_shift}}, '>', 0.0, "shortfall_floor");

  // Objective: expected profit minus expected shortage cost.
  for (int i = 0; i < n; ++i) {
    m.set_objective_coefficient(vars.x[static_cast<std::size_t>(i)],
                                inst.values[static_cast<std::size_t>(i)]);
  }
  m.set_objective_coefficient(vars.p, -inst.shortage_cost);
  m.set_maximize(true);
  return out;
}

// Completion of the continuous variables for a fixed binary selection:
// used both by the incumbent completer and by tests.
inline void complete_point(const CoreData& core, const PwlModelVars& vars,
                           double variance, std::vector<double>& point) {
  const int n = static_cast<int>(vars.x.size());
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    const double xi = point[static_cast<std::size_t>(vars.x[static_cast<std::size_t>(i)])] > 0.5 ? 1.0 : 0.0;
    point[static_cast<std::size_t>(vars.x[static_cast<std::size_t>(i)])] = xi;
    mean += xi * core.mu[static_cast<std::size_t>(i)];
  }
  const double v = std::min(std::max(variance, 0.0), core.sqp.v_max);
  const double s = core.sqp.eval(v);
  double p = std::max(0.0, core.e_shift * s);
  for (std::size_t i = 0; i < core.prob_tail.size(); ++i) {
    const double cand = (core.mass_tail[i] + core.e_shift) * s -
                        (core.capacity - mean) * core.prob_tail[i];
    p = std::max(p, cand);
  }
  point[static_cast<std::size_t>(vars.m)] = mean;
  point[static_cast<std::size_t>(vars.v)] = v;
  point[static_cast<std::size_t>(vars.s)] = s;
  point[static_cast<std::size_t>(vars.p)] = p;
}

inline CoreData make_core_data(const Instance& inst, const LossLinearization& lin,
                               const SqrtPwl& sqp, BoundKind kind) {
  CoreData core;
  core.mu = inst.mu;
  const PartialMassSums sums = partial_mass_sums(lin);
  core.mass_tail = sums.A;
  core.prob_tail = sums.B;
  core.e_shift = kind == BoundKind::edmundson_madanski ? lin.max_error : 0.0;
  core.capacity = inst.capacity;
  core.cost = inst.shortage_cost;
  core.sqp = sqp;
  return core;
}

}  // namespace pwl_detail

// Independent-normal PWL model: V = x'sigma^2 exactly.
inline PwlModel build_pwl_model(const Instance& inst, const LossLinearization& lin,
                                const SqrtPwl& sqp, BoundKind kind) {
  inst.validate();
  if (inst.correlated()) {
    throw std::invalid_argument(
        "build_pwl_model: instance has a covariance matrix; use build_pwl_model_mvn");
  }
  double v_max = 0.0;
  std::vector<double> var(static_cast<std::size_t>(inst.n));
  for (int i = 0; i < inst.n; ++i) {
    const double s2 = inst.sigma[static_cast<std::size_t>(i)] * inst.sigma[static_cast<std::size_t>(i)];
    var[static_cast<std::size_t>(i)] = s2;
    v_max += s2;
  }
  PwlModel out = pwl_detail::build_core(inst, lin, sqp, kind, v_max);
  {
    std::vector<std::pair<int, double>> coef;
    coef.emplace_back(out.vars.v, 1.0);
    for (int i = 0; i < inst.n; ++i) {
      coef.emplace_back(out.vars.x[static_cast<std::size_t>(i)], -var[static_cast<std::size_t>(i)]);
    }
    out.model.add_row(std::move(coef), '=', 0.0, "variance");
  }

  const pwl_detail::CoreData core = pwl_detail::make_core_data(inst, lin, sqp, kind);
  const PwlModelVars vars = out.vars;
  out.model.set_incumbent_completer(
      [core, vars, var](const std::vector<double>& x, std::vector<double>& completed) {
        completed = x;
        double variance = 0.0;
        for (std::size_t i = 0; i < vars.x.size(); ++i) {
          if (completed[static_cast<std::size_t>(vars.x[i])] > 0.5) variance += var[i];
        }
        pwl_detail::complete_point(core, vars, variance, completed);
        return true;
      });
  return out;
}

// Multivariate-normal PWL model: V >= x'Sigma x enforced by supporting
// hyperplanes generated at LP optima and candidate incumbents, with the
// exact diagonal part and the total-variance cap kept static.
inline PwlModel build_pwl_model_mvn(const Instance& inst, const LossLinearization& lin,
                                    const SqrtPwl& sqp, BoundKind kind) {
  inst.validate();
  if (!inst.correlated()) {
    throw std::invalid_argument("build_pwl_model_mvn: instance has no covariance matrix");
  }
  if (la::smallest_eigenvalue(inst.cov, inst.n) < -1e-8) {
    throw std::invalid_argument("build_pwl_model_mvn: covariance is not positive semidefinite");
  }
  const std::vector<double> cov = pwl_detail::filtered_covariance(inst);
  const auto n = static_cast<std::size_t>(inst.n);
  double v_max = 0.0;
  for (double v : cov) v_max += v;
  v_max = std::max(v_max, 1e-12);

  PwlModel out = pwl_detail::build_core(inst, lin, sqp, kind, v_max);
  // Exact diagonal floor: x binary makes x_i^2 = x_i, so the diagonal part
  // of x'Sigma x is linear.
  {
    std::vector<std::pair<int, double>> coef;
    coef.emplace_back(out.vars.v, 1.0);
    for (int i = 0; i < inst.n; ++i) {
      coef.emplace_back(out.vars.x[static_cast<std::size_t>(i)],
                        -cov[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(i)]);
    }
    out.model.add_row(std::move(coef), '>', 0.0, "variance_diag");
  }

  const PwlModelVars vars = out.vars;
  const int ni = inst.n;
  out.model.add_cut_oracle([cov, vars, ni, n](const std::vector<double>& point) {
    std::vector<ModelCut> cuts;
    std::vector<double> grad(n, 0.0);  // (Sigma x)_i
    double quad = 0.0;
    for (int i = 0; i < ni; ++i) {
      double row = 0.0;
      for (int j = 0; j < ni; ++j) {
        row += cov[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] *
               point[static_cast<std::size_t>(vars.x[static_cast<std::size_t>(j)])];
      }
      grad[static_cast<std::size_t>(i)] = row;
      quad += row * point[static_cast<std::size_t>(vars.x[static_cast<std::size_t>(i)])];
    }
    const double v_hat = point[static_cast<std::size_t>(vars.v)];
    if (v_hat >= quad - 1e-6) return cuts;
    // Supporting hyperplane of the convex quadratic at the current point:
    // V >= quad + 2 grad'(x - x_hat)  ==>  V - 2 grad'x >= -quad.
    ModelCut cut;
    cut.sense = '>';
    cut.rhs = -quad;
    cut.coef.emplace_back(vars.v, 1.0);
    for (int i = 0; i < ni; ++i) {
      if (grad[static_cast<std::size_t>(i)] != 0.0) {
        cut.coef.emplace_back(vars.x[static_cast<std::size_t>(i)],
                              -2.0 * grad[static_cast<std::size_t>(i)]);
      }
    }
    cuts.push_back(std::move(cut));
    return cuts;
  });

  const pwl_detail::CoreData core = pwl_detail::make_core_data(inst, lin, sqp, kind);
  out.model.set_incumbent_completer(
      [core, vars, cov, ni, n](const std::vector<double>& x, std::vector<double>& completed) {
        completed = x;
        double variance = 0.0;
        for (int i = 0; i < ni; ++i) {
          const double xi = completed[static_cast<std::size_t>(vars.x[static_cast<std::size_t>(i)])] > 0.5 ? 1.0 : 0.0;
          for (int j = 0; j < ni; ++j) {
            const double xj = completed[static_cast<std::size_t>(vars.x[static_cast<std::size_t>(j)])] > 0.5 ? 1.0 : 0.0;
            variance += xi * xj * cov[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
          }
        }
        pwl_detail::complete_point(core, vars, variance, completed);
        return true;
      });
  return out;
}

struct BracketConfig {
  int W = 100;               // shortfall linearisation regions
  double sqrt_step = 0.1;    // sqrt grid step; a fraction of V_max by default
  bool normalised_step = true;
  double rel_tol = 1e-4;
  double time_limit = 600.0;
  int sim_runs = 100000;     // tie-break simulation runs
  std::uint64_t sim_seed = 20260817;
  LossCache* cache = nullptr;  // optional shared loss-linearisation cache
};

struct BracketResult {
  double upper = 0.0;  // objective bound from the under-estimating variant
  double lower = 0.0;  // objective bound from the over-estimating variant
  double gap = 0.0;    // (upper - lower) / lower
  std::vector<double> x;
  Solution upper_sol;
  Solution lower_sol;
  bool tie_break_used = false;
  double sim_upper = 0.0;  // simulated values when the tie-break ran
  double sim_lower = 0.0;
  bool partial = false;  // a solve stopped before proving optimality
};

namespace pwl_detail {

inline std::vector<double> extract_binaries(const Solution& sol, const PwlModelVars& vars) {
  std::vector<double> x;
  if (sol.x.empty()) return x;
  x.reserve(vars.x.size());
  for (int idx : vars.x) {
    x.push_back(sol.x[static_cast<std::size_t>(idx)] > 0.5 ? 1.0 : 0.0);
  }
  return x;
}

}  // namespace pwl_detail

// Solve both variants and fold them into a bracketed answer. When the two
// optimal selections coincide the common vector is returned as-is; otherwise
// both are simulated under common random numbers and the better one kept.
inline BracketResult solve_bracket(const Instance& inst, const BracketConfig& cfg = {}) {
  inst.validate();
  static LossCache shared_cache;
  LossCache& cache = cfg.cache != nullptr ? *cfg.cache : shared_cache;
  const LossLinearization lin = cache.get(cfg.W);

  double v_max = 0.0;
  if (inst.correlated()) {
    for (double v : pwl_detail::filtered_covariance(inst)) v_max += v;
  } else {
    for (double s : inst.sigma) v_max += s * s;
  }
  v_max = std::max(v_max, 1e-12);
  const double step = cfg.normalised_step ? cfg.sqrt_step * v_max : cfg.sqrt_step;
  const SqrtPwl sq_lower = build_sqrt_pwl(v_max, step, SqrtBoundKind::lower);
  const SqrtPwl sq_upper = build_sqrt_pwl(v_max, step, SqrtBoundKind::upper);

  PwlModel upper_model =
      inst.correlated()
          ? build_pwl_model_mvn(inst, lin, sq_lower, BoundKind::jensen)
          : build_pwl_model(inst, lin, sq_lower, BoundKind::jensen);
  PwlModel lower_model =
      inst.correlated()
          ? build_pwl_model_mvn(inst, lin, sq_upper, BoundKind::edmundson_madanski)
          : build_pwl_model(inst, lin, sq_upper, BoundKind::edmundson_madanski);

  BracketResult out;
  out.upper_sol = solve(upper_model.model, cfg.rel_tol, cfg.time_limit);
  out.lower_sol = solve(lower_model.model, cfg.rel_tol, cfg.time_limit);
  out.partial = out.upper_sol.status != SolveStatus::optimal ||
                out.lower_sol.status != SolveStatus::optimal;

  // The under-estimating model's certified bound stays valid even when its
  // search stopped early; the over-estimating model's incumbent value is a
  // lower bound through the exact value of its own selection.
  out.upper = out.upper_sol.status == SolveStatus::optimal ? out.upper_sol.objective
                                                           : out.upper_sol.best_bound;
  out.lower = out.lower_sol.objective;

  std::vector<double> xu = pwl_detail::extract_binaries(out.upper_sol, upper_model.vars);
  std::vector<double> xl = pwl_detail::extract_binaries(out.lower_sol, lower_model.vars);
  if (!xu.empty() && xu == xl) {
    out.x = std::move(xu);
  } else if (xu.empty() && xl.empty()) {
    // No incumbent on either side; nothing to report.
  } else if (xu.empty()) {
    out.x = std::move(xl);
  } else if (xl.empty()) {
    out.x = std::move(xu);
  } else {
    out.tie_break_used = true;
    const SimReport ru = evaluate_static(xu, inst, cfg.sim_seed, cfg.sim_runs);
    const SimReport rl = evaluate_static(xl, inst, cfg.sim_seed, cfg.sim_runs);
    out.sim_upper = ru.mean;
    out.sim_lower = rl.mean;
    out.x = ru.mean >= rl.mean ? std::move(xu) : std::move(xl);
  }

  const double denom = std::max(std::abs(out.lower), 1e-10);
  out.gap = (out.upper - out.lower) / denom;
  return out;
}

}  // namespace sknap
