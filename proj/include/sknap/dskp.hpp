#pragma once

// Dynamic stochastic knapsack: items arrive in index order, every weight is
// observed once its item has been considered (selected or not), and unused
// capacity carries no value while overshoot is charged at the shortage cost.
// This header provides the exact conditional-law update, a discretised
// stochastic dynamic program over (stage, residual capacity, last observed
// weight), an exact recursion for discrete weight supports, and the
// receding-horizon heuristic that re-solves a static knapsack at every stage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sknap/distributions.hpp"
#include "sknap/instance.hpp"
#include "sknap/linalg.hpp"
#include "sknap/loss.hpp"
#include "sknap/model.hpp"
#include "sknap/normal.hpp"
#include "sknap/rng.hpp"
#include "sknap/sskp_lc.hpp"
#include "sknap/sskp_pwl.hpp"

namespace sknap {

// ---------------------------------------------------------------------------
// Conditional law of the unobserved weights given realised ones.
// ---------------------------------------------------------------------------

struct ConditionalLaw {
  std::vector<int> index;    // original indices of the unobserved coordinates
  std::vector<double> mean;  // conditional means, aligned with `index`
  std::vector<double> cov;   // row-major conditional covariance over `index`
};

// Exact multivariate-normal conditioning: partition the coordinates into the
// observed set O and the rest U, then
//   mean_U|O = mu_U + S_UO S_OO^{-1} (z - mu_O)
//   cov_U|O  = S_UU - S_UO S_OO^{-1} S_OU.
// The observed block is factored with the same escalating diagonal jitter the
// sampler uses; a block that stays singular beyond that ladder is an error.
inline ConditionalLaw conditional_update(const std::vector<double>& mu,
                                         const std::vector<double>& cov, int n,
                                         const std::vector<std::pair<int, double>>& observed) {
  if (n < 1) throw std::invalid_argument("conditional_update: n must be >= 1");
  const auto nn = static_cast<std::size_t>(n);
  if (mu.size() != nn || cov.size() != nn * nn) {
    throw std::invalid_argument("conditional_update: mu/cov dimensions do not match n");
  }
  std::vector<char> seen(nn, 0);
  for (const auto& [idx, z] : observed) {
    if (idx < 0 || idx >= n) throw std::invalid_argument("conditional_update: index out of range");
    if (seen[static_cast<std::size_t>(idx)]) {
      throw std::invalid_argument("conditional_update: duplicate observed index");
    }
    seen[static_cast<std::size_t>(idx)] = 1;
    if (!std::isfinite(z)) throw std::invalid_argument("conditional_update: non-finite observation");
  }

  ConditionalLaw law;
  for (int i = 0; i < n; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) law.index.push_back(i);
  }
  const auto u_cnt = law.index.size();
  const auto o_cnt = observed.size();
  if (o_cnt == 0) {
    law.mean = mu;
    law.cov = cov;
    return law;
  }
  if (u_cnt == 0) return law;

  const auto at = [&cov, nn](int i, int j) {
    return cov[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)];
  };
  std::vector<double> s_oo(o_cnt * o_cnt);
  std::vector<double> resid(o_cnt);
  for (std::size_t a = 0; a < o_cnt; ++a) {
    resid[a] = observed[a].second - mu[static_cast<std::size_t>(observed[a].first)];
    for (std::size_t b = 0; b < o_cnt; ++b) {
      s_oo[a * o_cnt + b] = at(observed[a].first, observed[b].first);
    }
  }
  const std::vector<double> l = la::cholesky_factor(s_oo, static_cast<int>(o_cnt), 1e-10);

  // w = S_OO^{-1} (z - mu_O), and one solve per cross-covariance row.
  const std::vector<double> w = la::cholesky_solve(l, static_cast<int>(o_cnt), resid);
  std::vector<std::vector<double>> s_inv_cross(u_cnt);
  std::vector<double> cross_row(o_cnt);
  law.mean.resize(u_cnt);
  for (std::size_t r = 0; r < u_cnt; ++r) {
    double m = mu[static_cast<std::size_t>(law.index[r])];
    for (std::size_t a = 0; a < o_cnt; ++a) {
      cross_row[a] = at(law.index[r], observed[a].first);
      m += cross_row[a] * w[a];
    }
    law.mean[r] = m;
    s_inv_cross[r] = la::cholesky_solve(l, static_cast<int>(o_cnt), cross_row);
  }

  law.cov.resize(u_cnt * u_cnt);
  for (std::size_t r = 0; r < u_cnt; ++r) {
    for (std::size_t cidx = r; cidx < u_cnt; ++cidx) {
      double v = at(law.index[r], law.index[cidx]);
      for (std::size_t a = 0; a < o_cnt; ++a) {
        v -= at(law.index[cidx], observed[a].first) * s_inv_cross[r][a];
      }
      law.cov[r * u_cnt + cidx] = v;
      law.cov[cidx * u_cnt + r] = v;
    }
  }

  double scale = 1.0;
  for (std::size_t r = 0; r < u_cnt; ++r) scale = std::max(scale, law.cov[r * u_cnt + r]);
  if (la::smallest_eigenvalue(law.cov, static_cast<int>(u_cnt)) < -1e-8 * scale) {
    throw std::runtime_error("conditional_update: conditional covariance is not positive semidefinite");
  }
  return law;
}

// ---------------------------------------------------------------------------
// Exact recursion for discrete weight supports (oracle-scale instances).
// ---------------------------------------------------------------------------

struct DiscreteItem {
  double value = 0.0;
  std::vector<double> weights;  // support points
  std::vector<double> probs;    // matching probabilities, summing to one
};

struct DiscreteDskp {
  std::vector<DiscreteItem> items;
  double capacity = 0.0;
  double shortage_cost = 0.0;

  void validate() const {
    if (items.empty()) throw std::invalid_argument("discrete dskp: needs at least one item");
    if (!(shortage_cost > 0.0)) {
      throw std::invalid_argument("discrete dskp: shortage cost must be positive");
    }
    for (const DiscreteItem& it : items) {
      if (it.weights.empty() || it.weights.size() != it.probs.size()) {
        throw std::invalid_argument("discrete dskp: weights/probs must match and be non-empty");
      }
      double total = 0.0;
      for (double p : it.probs) {
        if (!(p > 0.0)) throw std::invalid_argument("discrete dskp: probabilities must be positive");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("discrete dskp: probabilities must sum to one");
      }
    }
  }
};

// Optimal expected value of the adaptive policy, by direct enumeration of the
// outcome tree. Exponential in the number of items; intended as an exact
// reference for small instances. The terminal value c*min(q, 0) charges the
// final overshoot once, which is identical to charging
// max(x*o_n - C, 0) at the last stage.
inline double sdp_value_discrete(const DiscreteDskp& d) {
  d.validate();
  const int n = static_cast<int>(d.items.size());
  const std::function<double(int, double)> best = [&](int stage, double q) -> double {
    if (stage == n) return d.shortage_cost * std::min(q, 0.0);
    const DiscreteItem& it = d.items[static_cast<std::size_t>(stage)];
    const double skip = best(stage + 1, q);
    double take = it.value;
    for (std::size_t k = 0; k < it.weights.size(); ++k) {
      take += it.probs[k] * best(stage + 1, q - it.weights[k]);
    }
    return std::max(skip, take);
  };
  return best(0, d.capacity);
}

// ---------------------------------------------------------------------------
// Discretised stochastic dynamic program for continuous weights.
// ---------------------------------------------------------------------------

struct SdpConfig {
  double capacity_step = 0.0;  // grid step; 0 selects capacity / 400
  int weight_points = 15;      // equal-probability quadrature points per stage
  int history_points = 15;     // observed-weight axis nodes (correlated case)
  double history_span = 5.0;   // axis half-width in marginal std deviations
  long long max_states = 50000000;

  void validate() const {
    if (capacity_step < 0.0 || !std::isfinite(capacity_step)) {
      throw std::invalid_argument("sdp config: capacity step must be non-negative");
    }
    if (weight_points < 2) throw std::invalid_argument("sdp config: weight points must be >= 2");
    if (history_points < 2) throw std::invalid_argument("sdp config: history points must be >= 2");
    if (!(history_span > 0.0)) throw std::invalid_argument("sdp config: history span must be positive");
    if (max_states < 1) throw std::invalid_argument("sdp config: state cap must be positive");
  }
};

// Value and decision tables over the discretised state space. Stage indices
// are zero-based; stage n is the terminal stage with the closed-form value
// c*min(q, 0). Residual capacity is gridded from the initial capacity down to
// a floor below which the value is extrapolated with slope c, which is exact
// because every continuation there ends with a linear overshoot charge.
struct DskpPolicy {
  Instance inst;        // copy of the problem the tables were built for
  bool banded = false;  // true when the weight process carries one-step memory
  double rho = 0.0;
  double q_top = 0.0;
  double q_step = 0.0;
  double q_floor = 0.0;
  int q_points = 0;
  std::vector<double> std_means;                 // standard-normal stratum conditional means
  std::vector<std::vector<double>> supports;     // per-item quadrature supports (independent case)
  std::vector<std::vector<double>> o_axis;       // per-stage observed-weight axes (banded case)
  std::vector<std::vector<double>> value_table;  // per stage, row-major [q][o]
  std::vector<std::vector<signed char>> decision_table;
  double value_root = 0.0;

  double terminal_value(double q) const { return inst.shortage_cost * std::min(q, 0.0); }

  int history_count(int stage) const {
    if (!banded || stage == 0) return 1;
    return static_cast<int>(o_axis[static_cast<std::size_t>(stage)].size());
  }

  // Interpolated value of stage `stage` at residual capacity q given the
  // previous item's realised weight (ignored when the table is memoryless).
  double value_at(int stage, double q, double o_prev = 0.0) const {
    if (stage >= inst.n) return terminal_value(q);
    const std::vector<double>& tab = value_table[static_cast<std::size_t>(stage)];
    const int o_cnt = history_count(stage);

    const auto row_value = [&](int q_idx) {
      const std::size_t base = static_cast<std::size_t>(q_idx) * static_cast<std::size_t>(o_cnt);
      if (o_cnt == 1) return tab[base];
      const std::vector<double>& axis = o_axis[static_cast<std::size_t>(stage)];
      if (o_prev <= axis.front()) return tab[base];
      if (o_prev >= axis.back()) return tab[base + static_cast<std::size_t>(o_cnt - 1)];
      const double t = (o_prev - axis.front()) / (axis[1] - axis[0]);
      const int lo = std::min(static_cast<int>(t), o_cnt - 2);
      const double frac = t - lo;
      return (1.0 - frac) * tab[base + static_cast<std::size_t>(lo)] +
             frac * tab[base + static_cast<std::size_t>(lo + 1)];
    };

    if (q >= q_top) return row_value(0);
    if (q <= q_floor) {
      return row_value(q_points - 1) + inst.shortage_cost * (q - q_floor);
    }
    const double t = (q_top - q) / q_step;
    const int lo = std::min(static_cast<int>(t), q_points - 2);
    const double frac = t - lo;
    return (1.0 - frac) * row_value(lo) + frac * row_value(lo + 1);
  }

  // Quadrature support of item `stage`'s weight given the previous realised
  // weight (the one-step conditional law in the banded case, the marginal
  // otherwise). Every support consists of the conditional means of K
  // equal-probability strata, so the discretised law keeps the exact mean.
  std::vector<double> stage_support(int stage, double o_prev) const {
    if (!banded || stage == 0) return supports[static_cast<std::size_t>(stage)];
    const auto i = static_cast<std::size_t>(stage);
    const double mean = inst.mu[i] + rho * (inst.sigma[i] / inst.sigma[i - 1]) * (o_prev - inst.mu[i - 1]);
    const double sd = inst.sigma[i] * std::sqrt(1.0 - rho * rho);
    std::vector<double> pts(std_means.size());
    for (std::size_t t = 0; t < std_means.size(); ++t) pts[t] = mean + sd * std_means[t];
    return pts;
  }

  // Expected continuation value of skipping / taking item `stage`; both
  // integrate the next-stage table over the stage's weight quadrature.
  std::pair<double, double> action_values(int stage, double q, double o_prev = 0.0) const {
    const std::vector<double> pts = stage_support(stage, o_prev);
    const double inv = 1.0 / static_cast<double>(pts.size());
    double take = 0.0;
    for (double w : pts) take += value_at(stage + 1, q - w, w);
    take = inst.values[static_cast<std::size_t>(stage)] + inv * take;
    double skip;
    if (banded && stage + 1 < inst.n) {
      skip = 0.0;
      for (double w : pts) skip += value_at(stage + 1, q, w);
      skip *= inv;
    } else {
      // Memoryless continuation: the observed weight only matters through the
      // residual capacity, which a skipped item leaves unchanged.
      skip = value_at(stage + 1, q);
    }
    return {skip, take};
  }

  int decision_at(int stage, double q, double o_prev = 0.0) const {
    const auto [skip, take] = action_values(stage, q, o_prev);
    return take > skip ? 1 : 0;
  }
};

namespace dskp_detail {

// Infer the banded correlation level and verify the covariance really has the
// one-step-memory form sigma_ij = rho^|i-j| sigma_i sigma_j.
inline double banded_rho(const Instance& inst) {
  const auto n = static_cast<std::size_t>(inst.n);
  const double r = inst.cov[1] / (inst.sigma[0] * inst.sigma[1]);
  if (!(std::abs(r) < 1.0)) {
    throw std::invalid_argument("sdp_solve: correlation level must lie strictly inside (-1, 1)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double expect = std::pow(r, std::abs(static_cast<double>(i) - static_cast<double>(j))) *
                            inst.sigma[i] * inst.sigma[j];
      if (std::abs(inst.cov[i * n + j] - expect) > 1e-8 * inst.sigma[i] * inst.sigma[j]) {
        throw std::invalid_argument(
            "sdp_solve: covariance is not banded; only one-step-memory correlation is supported");
      }
    }
  }
  return r;
}

inline std::vector<double> marginal_support(const Instance& inst, int item, int k) {
  std::vector<double> pts(static_cast<std::size_t>(k));
  const auto i = static_cast<std::size_t>(item);
  for (int t = 0; t < k; ++t) {
    const double u = (t + 0.5) / static_cast<double>(k);
    if (inst.distribution == "gamma") {
      pts[static_cast<std::size_t>(t)] = dist::gamma_quantile_mc(u, inst.mu[i], inst.sigma[i] / inst.mu[i]);
    } else if (inst.distribution == "lognormal") {
      pts[static_cast<std::size_t>(t)] =
          dist::lognormal_quantile_mc(u, inst.mu[i], inst.sigma[i] / inst.mu[i]);
    } else {
      pts[static_cast<std::size_t>(t)] = inst.mu[i] + inst.sigma[i] * norm::quantile(u);
    }
  }
  return pts;
}

}  // namespace dskp_detail

// Backward recursion over the discretised state space. Supports independent
// normal/gamma/lognormal weights and banded-correlation multivariate normal
// weights, where conditioning on the whole history equals conditioning on the
// last realised weight.
inline DskpPolicy sdp_solve(const Instance& inst, const SdpConfig& cfg = {}) {
  inst.validate();
  cfg.validate();
  if (inst.n > 32) {
    throw std::invalid_argument("sdp_solve: instance is too large for the dynamic program");
  }

  DskpPolicy pol;
  pol.inst = inst;
  if (inst.correlated()) {
    if (inst.distribution != "multivariate-normal") {
      throw std::invalid_argument("sdp_solve: correlated weights must be multivariate normal");
    }
    pol.rho = dskp_detail::banded_rho(inst);
    pol.banded = std::abs(pol.rho) > 1e-12;
  }

  // Capacity grid: anchored at the initial capacity, descending to a floor
  // low enough that every continuation below it is in the linear-overshoot
  // regime (weights have negligible mass above mu + 5 sigma).
  pol.q_top = inst.capacity;
  pol.q_step = cfg.capacity_step > 0.0 ? cfg.capacity_step : inst.capacity / 400.0;
  double floor_target = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    floor_target -= std::abs(inst.mu[static_cast<std::size_t>(i)]) +
                    5.0 * inst.sigma[static_cast<std::size_t>(i)];
  }
  pol.q_points = static_cast<int>(std::ceil((pol.q_top - floor_target) / pol.q_step)) + 1;
  pol.q_floor = pol.q_top - (pol.q_points - 1) * pol.q_step;

  pol.z_nodes.resize(static_cast<std::size_t>(cfg.weight_points));
  for (int t = 0; t < cfg.weight_points; ++t) {
    pol.z_nodes[static_cast<std::size_t>(t)] =
        norm::quantile((t + 0.5) / static_cast<double>(cfg.weight_points));
  }
  pol.supports.resize(static_cast<std::size_t>(inst.n));
  if (!pol.banded) {
    for (int i = 0; i < inst.n; ++i) {
      pol.supports[static_cast<std::size_t>(i)] =
          dskp_detail::marginal_support(inst, i, cfg.weight_points);
    }
  } else {
    pol.supports[0] = dskp_detail::marginal_support(inst, 0, cfg.weight_points);
  }

  pol.o_axis.resize(static_cast<std::size_t>(inst.n));
  long long states = 0;
  for (int i = 0; i < inst.n; ++i) {
    if (pol.banded && i > 0) {
      const auto prev = static_cast<std::size_t>(i - 1);
      const double lo = inst.mu[prev] - cfg.history_span * inst.sigma[prev];
      const double hi = inst.mu[prev] + cfg.history_span * inst.sigma[prev];
      std::vector<double>& axis = pol.o_axis[static_cast<std::size_t>(i)];
      axis.resize(static_cast<std::size_t>(cfg.history_points));
      for (int a = 0; a < cfg.history_points; ++a) {
        axis[static_cast<std::size_t>(a)] = lo + (hi - lo) * a / (cfg.history_points - 1);
      }
    }
    states += static_cast<long long>(pol.q_points) * pol.history_count(i);
  }
  if (states > cfg.max_states) {
    throw std::invalid_argument("sdp_solve: state space needs " + std::to_string(states) +
                                " nodes, above the configured cap of " +
                                std::to_string(cfg.max_states));
  }

  pol.value_table.resize(static_cast<std::size_t>(inst.n));
  pol.decision_table.resize(static_cast<std::size_t>(inst.n));
  for (int stage = inst.n - 1; stage >= 0; --stage) {
    const int o_cnt = pol.history_count(stage);
    auto& vals = pol.value_table[static_cast<std::size_t>(stage)];
    auto& decs = pol.decision_table[static_cast<std::size_t>(stage)];
    vals.resize(static_cast<std::size_t>(pol.q_points) * static_cast<std::size_t>(o_cnt));
    decs.resize(vals.size());
    for (int j = 0; j < pol.q_points; ++j) {
      const double q = pol.q_top - j * pol.q_step;
      for (int a = 0; a < o_cnt; ++a) {
        const double o_prev =
            o_cnt == 1 ? 0.0 : pol.o_axis[static_cast<std::size_t>(stage)][static_cast<std::size_t>(a)];
        const auto [skip, take] = pol.action_values(stage, q, o_prev);
        const std::size_t slot =
            static_cast<std::size_t>(j) * static_cast<std::size_t>(o_cnt) + static_cast<std::size_t>(a);
        vals[slot] = std::max(skip, take);
        decs[slot] = take > skip ? 1 : 0;
      }
    }
  }
  pol.value_root = pol.value_at(0, inst.capacity);
  return pol;
}

// ---------------------------------------------------------------------------
// Receding-horizon heuristic.
// ---------------------------------------------------------------------------

enum class RhSolver { pwl, pwl_mvn, lc, lc_mc };

inline std::string to_string(RhSolver s) {
  switch (s) {
    case RhSolver::pwl: return "pwl";
    case RhSolver::pwl_mvn: return "pwl-mvn";
    case RhSolver::lc: return "lc";
    case RhSolver::lc_mc: return "lc-mc";
  }
  return "unknown";
}

struct RhConfig {
  RhSolver solver = RhSolver::lc;
  bool ignore_correlation = false;  // solve each stage on unconditional marginals
  double rel_tol = 1e-6;
  double time_limit = 60.0;  // per stage solve
  int pwl_regions = 100;     // shortfall linearisation regions for the pwl solvers
  double sqrt_step = 0.1;    // sqrt grid step as a fraction of the stage variance range
  int mc_replications = 1000;
  std::uint64_t mc_seed = 1;
};

struct RhResult {
  double realised_value = 0.0;     // accrual plus terminal overshoot charge
  double expected_accrual = 0.0;   // sum of selected expected profits
  double terminal_penalty = 0.0;   // c * min(final residual, 0)
  std::vector<int> decisions;
  std::vector<double> residual_trace;  // residual capacity after each stage
  int solve_failures = 0;
  bool degraded = false;  // at least one stage fell back to "skip"
};

namespace rh_detail {

struct StageLaw {
  std::vector<double> mean;
  std::vector<double> sigma;
  std::vector<double> cov;  // empty when the stage model is independent
};

// Law of the remaining weights at stage k. Full conditional when the instance
// is correlated and correlation is honoured; unconditional marginals when it
// is ignored or the weights are independent.
inline StageLaw stage_law(const Instance& inst, int k,
                          const std::vector<std::pair<int, double>>& observed,
                          bool ignore_correlation) {
  StageLaw law;
  const auto rem = static_cast<std::size_t>(inst.n - k);
  if (inst.correlated() && !ignore_correlation) {
    if (k == 0) {
      law.mean = inst.mu;
      law.cov = inst.cov;
    } else {
      ConditionalLaw cl = conditional_update(inst.mu, inst.cov, inst.n, observed);
      law.mean = std::move(cl.mean);
      law.cov = std::move(cl.cov);
    }
    law.sigma.resize(rem);
    for (std::size_t i = 0; i < rem; ++i) {
      law.sigma[i] = std::sqrt(std::max(law.cov[i * rem + i], 0.0));
    }
    if (rem == 1) law.cov.clear();  // one remaining weight is just a normal
  } else {
    law.mean.assign(inst.mu.begin() + k, inst.mu.end());
    law.sigma.assign(inst.sigma.begin() + k, inst.sigma.end());
  }
  return law;
}

inline Instance stage_instance(const Instance& inst, int k, StageLaw law, double capacity) {
  Instance sub;
  sub.n = inst.n - k;
  sub.values.assign(inst.values.begin() + k, inst.values.end());
  sub.mu = std::move(law.mean);
  sub.sigma = std::move(law.sigma);
  sub.cov = std::move(law.cov);
  sub.capacity = capacity;
  sub.shortage_cost = inst.shortage_cost;
  sub.distribution = sub.cov.empty()
                         ? (inst.distribution == "multivariate-normal" ? "normal" : inst.distribution)
                         : "multivariate-normal";
  sub.meta = inst.meta;
  return sub;
}

// Single piecewise-linear solve (the shortfall-under-estimating variant).
// `use_cov` selects the lazy-cut covariance model when the stage law carries
// one; otherwise the independent-variance model is built.
inline Solution solve_stage_pwl(const Instance& sub, const RhConfig& cfg, bool use_cov) {
  static LossCache cache;
  const LossLinearization lin = cache.get(cfg.pwl_regions);
  Instance indep = sub;
  if (!use_cov && indep.correlated()) {
    indep.cov.clear();
    indep.distribution = "normal";
  }
  const Instance& m_inst = use_cov ? sub : indep;
  double v_max = 0.0;
  if (m_inst.correlated()) {
    for (double v : pwl_detail::filtered_covariance(m_inst)) v_max += v;
  } else {
    for (double s : m_inst.sigma) v_max += s * s;
  }
  v_max = std::max(v_max, 1e-12);
  const SqrtPwl sq = build_sqrt_pwl(v_max, cfg.sqrt_step * v_max, SqrtBoundKind::lower);
  PwlModel model = m_inst.correlated() ? build_pwl_model_mvn(m_inst, lin, sq, BoundKind::jensen)
                                       : build_pwl_model(m_inst, lin, sq, BoundKind::jensen);
  Solution sol = solve(model.model, cfg.rel_tol, cfg.time_limit);
  if (!sol.x.empty()) {
    std::vector<double> x = pwl_detail::extract_binaries(sol, model.vars);
    sol.x = std::move(x);
  }
  return sol;
}

inline Solution solve_stage(const Instance& sub, int stage, const RhConfig& cfg) {
  switch (cfg.solver) {
    case RhSolver::lc: {
      // Gamma and lognormal stages are solved through their moment-matched
      // normal counterpart, the same stand-in the static heuristic uses.
      Instance counterpart = sub;
      if (!sub.correlated() && sub.distribution != "normal") counterpart.distribution = "normal";
      const ShortfallOracle orc = counterpart.correlated() ? make_mvn_oracle(counterpart)
                                                           : make_normal_oracle(counterpart);
      return solve_lc(counterpart, orc, cfg.rel_tol, cfg.time_limit);
    }
    case RhSolver::lc_mc: {
      const std::uint64_t seed =
          rng::keyed_u64(cfg.mc_seed, 0x6b8f1d2c9e3a4501ULL, static_cast<std::uint64_t>(stage), 0);
      const ShortfallOracle orc = make_mc_oracle(sub, seed, cfg.mc_replications);
      return solve_lc(sub, orc, cfg.rel_tol, cfg.time_limit);
    }
    case RhSolver::pwl:
      return solve_stage_pwl(sub, cfg, /*use_cov=*/false);
    case RhSolver::pwl_mvn:
      return solve_stage_pwl(sub, cfg, /*use_cov=*/sub.correlated());
  }
  throw std::logic_error("receding_horizon: unknown stage solver");
}

}  // namespace rh_detail

// One pass of the rolling heuristic over a realised weight path: at every
// stage re-solve the static knapsack for the remaining items under the
// current conditional law and residual capacity, implement only the first
// decision, then observe the weight and roll forward. The terminal overshoot
// is charged once at the end. When the residual capacity is already
// exhausted the stage separates: the shortfall of any further selection is
// linear in its weight (weights carry no mass below the residual), so an item
// is worth taking exactly when its expected profit beats the expected
// shortage charge of its weight.
inline RhResult receding_horizon(const Instance& inst, const std::vector<double>& realised,
                                 const RhConfig& cfg = {}) {
  inst.validate();
  if (realised.size() != static_cast<std::size_t>(inst.n)) {
    throw std::invalid_argument("receding_horizon: need one realised weight per item");
  }
  for (double w : realised) {
    if (!std::isfinite(w)) throw std::invalid_argument("receding_horizon: non-finite weight");
  }

  RhResult out;
  out.decisions.resize(static_cast<std::size_t>(inst.n), 0);
  out.residual_trace.resize(static_cast<std::size_t>(inst.n), 0.0);
  double q = inst.capacity;
  std::vector<std::pair<int, double>> observed;
  observed.reserve(static_cast<std::size_t>(inst.n));

  for (int k = 0; k < inst.n; ++k) {
    rh_detail::StageLaw law = rh_detail::stage_law(inst, k, observed, cfg.ignore_correlation);
    int x_k = 0;
    if (q <= 1e-9) {
      x_k = inst.values[static_cast<std::size_t>(k)] > inst.shortage_cost * law.mean[0] ? 1 : 0;
    } else {
      const Instance sub = rh_detail::stage_instance(inst, k, std::move(law), q);
      Solution sol;
      bool ok = true;
      try {
        sol = rh_detail::solve_stage(sub, k, cfg);
      } catch (const std::exception&) {
        ok = false;
      }
      ok = ok && !sol.x.empty() &&
           (sol.status == SolveStatus::optimal || sol.status == SolveStatus::feasible_limit);
      if (ok) {
        x_k = sol.x[0] > 0.5 ? 1 : 0;
      } else {
        ++out.solve_failures;
        out.degraded = true;
      }
    }
    out.decisions[static_cast<std::size_t>(k)] = x_k;
    if (x_k == 1) {
      out.expected_accrual += inst.values[static_cast<std::size_t>(k)];
      q -= realised[static_cast<std::size_t>(k)];
    }
    observed.emplace_back(k, realised[static_cast<std::size_t>(k)]);
    out.residual_trace[static_cast<std::size_t>(k)] = q;
  }

  out.terminal_penalty = inst.shortage_cost * std::min(q, 0.0);
  out.realised_value = out.expected_accrual + out.terminal_penalty;
  return out;
}

}  // namespace sknap
