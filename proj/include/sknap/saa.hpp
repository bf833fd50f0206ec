#pragma once

// Sample-average approximation baseline.  Phase 0 sizes the scenario count
// with a large-deviation bound; phase 1 runs replications until a CLT-based
// optimality-gap estimate certifies the incumbent or the budget runs out.
//
// Each replication solves the sampled problem exactly: the sample-average
// shortfall is convex and piecewise linear in the selection, so the epigraph
// is built from lazy subgradient cuts at candidate points, which supports the
// same optima as an explicit per-scenario linearisation while keeping the
// node LPs small.  Tolerances (epsilon, delta) are relative to the objective
// scale, taken as max(1, |mean sampled optimum|).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "instance.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "sim.hpp"
#include "sskp_lc.hpp"

namespace sknap {

enum class SaaSizing { ld_satisfied, time_capped, n_capped };

inline std::string to_string(SaaSizing s) {
  switch (s) {
    case SaaSizing::ld_satisfied: return "ld-satisfied";
    case SaaSizing::time_capped: return "time-capped";
    case SaaSizing::n_capped: return "n-capped";
  }
  return "?";
}

struct SaaConfig {
  int n0 = 64;            // initial scenario count
  int warmup = 32;        // warm-up replications before certification starts
  int m_max = 1000;       // total replication budget in the certification phase
  double delta = 0.0;     // inner tolerance of the large-deviation condition
  double alpha = 0.05;    // confidence level of the sizing bound
  double epsilon = 1e-4;  // relative optimality tolerance
  int n_eval = 100000;    // out-of-sample draws per incumbent evaluation
  double time_limit = 600.0;    // wall-clock budget, seconds
  double inner_rel_tol = 1e-6;  // relative tolerance of the sampled solves

  void validate() const {
    if (n0 < 1 || warmup < 1 || m_max < 1 || n_eval < 1) {
      throw std::invalid_argument("SaaConfig: counts must be positive");
    }
    if (!(alpha > 0.0) || !(epsilon > 0.0) || !(time_limit > 0.0)) {
      throw std::invalid_argument("SaaConfig: alpha, epsilon and time_limit must be positive");
    }
    if (delta < 0.0 || delta >= epsilon) {
      throw std::invalid_argument("SaaConfig: delta must lie in [0, epsilon)");
    }
  }
};

struct SaaPhase0Result {
  int n = 0;                  // chosen scenario count
  SaaSizing status = SaaSizing::ld_satisfied;
  double sigma2_max = 0.0;    // final difference-variance estimate
  double gamma_hat = 0.0;     // plug-in large-deviation rate (inf if degenerate)
  double target_n = 0.0;      // scenario count the bound asks for
  int replications = 0;       // sizing solves performed across all scenario counts
  int discarded = 0;          // sizing solves that failed and were dropped
  double wall_time = 0.0;
};

struct SaaResult {
  std::vector<double> x;        // incumbent selection (binary values)
  bool certified = false;
  double gap = 0.0;             // relative gap estimate, clamped at zero
  double gap_raw = 0.0;         // unclamped estimate (negative means noise)
  double gap_se = 0.0;          // one standard error of the gap, same scale
  double sampled_mean = 0.0;    // mean of the replication optima
  double sampled_se = 0.0;      // standard error of that mean
  double incumbent_value = 0.0; // out-of-sample estimate at the incumbent
  double incumbent_se = 0.0;
  int n = 0;                    // scenario count used
  int replications = 0;         // certification replications kept
  int discarded = 0;            // certification replications dropped
  SaaSizing sizing = SaaSizing::ld_satisfied;
  double sizing_target_n = 0.0;
  double wall_time = 0.0;
};

namespace saa_detail {

// Key-stream tags so sizing draws, certification draws and the evaluation
// sample never overlap.
inline constexpr std::uint64_t kSizingStream = 0x5aa51a1e00000001ULL;
inline constexpr std::uint64_t kCertStream = 0x5aa51a1e00000002ULL;
inline constexpr std::uint64_t kEvalStream = 0x5aa51a1e00000003ULL;

// Profit of a selection under one sampled weight row.
inline double scenario_profit(const Instance& inst, const std::vector<double>& x,
                              const double* row) {
  double value = 0.0;
  double load = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    if (x[static_cast<std::size_t>(i)] <= 0.5) continue;
    value += inst.values[static_cast<std::size_t>(i)];
    load += row[i];
  }
  const double over = load - inst.capacity;
  return value - (over > 0.0 ? inst.shortage_cost * over : 0.0);
}

// Sample variance over one replication's scenarios of the profit difference
// between the incumbent and the replication's own solution.
inline double difference_variance(const Instance& inst, const std::vector<double>& sample,
                                  int n_scen, const std::vector<double>& x_inc,
                                  const std::vector<double>& x_rep) {
  if (n_scen < 2) return 0.0;
  bool same = true;
  for (int i = 0; i < inst.n; ++i) {
    if ((x_inc[static_cast<std::size_t>(i)] > 0.5) !=
        (x_rep[static_cast<std::size_t>(i)] > 0.5)) {
      same = false;
      break;
    }
  }
  if (same) return 0.0;
  double mean = 0.0;
  std::vector<double> diff(static_cast<std::size_t>(n_scen));
  for (int k = 0; k < n_scen; ++k) {
    const double* row = &sample[static_cast<std::size_t>(k) * inst.n];
    const double d = scenario_profit(inst, x_inc, row) - scenario_profit(inst, x_rep, row);
    diff[static_cast<std::size_t>(k)] = d;
    mean += d;
  }
  mean /= static_cast<double>(n_scen);
  double var = 0.0;
  for (const double d : diff) var += (d - mean) * (d - mean);
  return var / static_cast<double>(n_scen - 1);
}

// Scenario count the large-deviation bound requires: all 2^n candidate
// selections misclassified with probability at most alpha.
inline double ld_required(int n_items, double alpha, double gamma) {
  if (!(gamma > 0.0)) return 0.0;
  const double log_card = static_cast<double>(n_items) * std::log(2.0) - std::log(alpha);
  return log_card / gamma;
}

struct ReplicationRecord {
  std::vector<double> x;       // rounded sampled optimum
  double objective = 0.0;      // sampled optimal value
  std::vector<double> sample;  // the replication's scenario matrix
  double solve_time = 0.0;
};

struct ReplicationOutcome {
  bool ok = false;
  ReplicationRecord rec;
};

inline ReplicationOutcome solve_replication(const Instance& inst, int n_scen,
                                            std::uint64_t rep_seed, double rel_tol,
                                            double time_limit) {
  ReplicationOutcome out;
  if (time_limit <= 0.0) return out;
  ShortfallOracle oracle = make_mc_oracle(inst, rep_seed, n_scen);
  const auto t0 = std::chrono::steady_clock::now();
  const Solution s = solve_lc(inst, oracle, rel_tol, time_limit);
  out.rec.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s.status != SolveStatus::optimal) return out;
  out.ok = true;
  out.rec.objective = s.objective;
  out.rec.x.assign(static_cast<std::size_t>(inst.n), 0.0);
  for (int i = 0; i < inst.n; ++i) {
    out.rec.x[static_cast<std::size_t>(i)] = s.x[static_cast<std::size_t>(i)] > 0.5 ? 1.0 : 0.0;
  }
  out.rec.sample = std::move(oracle.sample);
  return out;
}

}  // namespace saa_detail

namespace saa_detail {
// Folds the replication optima and the incumbent's out-of-sample report into
// the result's gap estimate.  The gap is relative to max(1, |mean optimum|).
inline void update_gap_estimate(SaaResult& out, const std::vector<double>& vhat,
                                const SimReport& inc) {
  const int kept = static_cast<int>(vhat.size());
  double vbar = 0.0;
  for (const double v : vhat) vbar += v;
  vbar /= static_cast<double>(kept);
  double var = 0.0;
  for (const double v : vhat) var += (v - vbar) * (v - vbar);
  const double se_v =
      kept > 1 ? std::sqrt(var / static_cast<double>(kept - 1) / static_cast<double>(kept))
               : 0.0;
  const double scale = std::max(1.0, std::abs(vbar));
  out.sampled_mean = vbar;
  out.sampled_se = se_v;
  out.incumbent_value = inc.mean;
  out.incumbent_se = inc.se;
  // A negative realisation of the estimator carries no information beyond
  // sampling noise around an optimal incumbent, so the reported gap is its
  // positive part; the raw value stays available for diagnostics.
  out.gap_raw = (vbar - inc.mean) / scale;
  out.gap = std::max(out.gap_raw, 0.0);
  out.gap_se = std::hypot(se_v, inc.se) / scale;
}
}  // namespace saa_detail

// Phase 0: double the scenario count from n0 until the large-deviation
// condition N >= log(2^n / alpha) / gamma_hat holds, the wall clock runs out,
// or one sampled solve exceeds time_limit / 33 (the cap leaves room for the
// warm-up replications of the certification phase).  Replications are
// discarded whenever the scenario count changes.
inline SaaPhase0Result saa_phase0(const Instance& inst, const SaaConfig& cfg,
                                  std::uint64_t seed) {
  inst.validate();
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&t_start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };
  const double rep_budget = cfg.time_limit / 33.0;

  SaaPhase0Result out;
  int n_scen = cfg.n0;
  for (;;) {
    std::vector<saa_detail::ReplicationRecord> reps;
    std::size_t incumbent = 0;
    double sigma2 = 0.0;
    bool over_budget = false;  // last solve at this scenario count broke the cap
    bool timed_out = false;

    // Probe until the first nonzero difference variance appears; a bounded
    // number of attempts keeps degenerate (zero-variance) instances finite.
    for (int r = 0; r < cfg.warmup && sigma2 <= 0.0; ++r) {
      const double remaining = cfg.time_limit - elapsed();
      if (remaining <= 0.0) {
        timed_out = true;
        break;
      }
      const std::uint64_t rep_seed =
          rng::keyed_u64(seed, saa_detail::kSizingStream, static_cast<std::uint64_t>(n_scen),
                    static_cast<std::uint64_t>(r));
      auto o = saa_detail::solve_replication(inst, n_scen, rep_seed, cfg.inner_rel_tol,
                                             remaining);
      ++out.replications;
      if (!o.ok) {
        ++out.discarded;
        continue;
      }
      if (o.rec.solve_time > rep_budget) over_budget = true;
      reps.push_back(std::move(o.rec));
      const std::size_t last = reps.size() - 1;
      if (reps[last].objective > reps[incumbent].objective) {
        // Incumbent change: recompute every stored difference variance.
        incumbent = last;
        sigma2 = 0.0;
        for (const auto& rec : reps) {
          sigma2 = std::max(sigma2, saa_detail::difference_variance(
                                        inst, rec.sample, n_scen, reps[incumbent].x, rec.x));
        }
      } else {
        sigma2 = std::max(sigma2, saa_detail::difference_variance(
                                      inst, reps[last].sample, n_scen, reps[incumbent].x,
                                      reps[last].x));
      }
      if (over_budget) break;
    }

    out.n = n_scen;
    out.sigma2_max = sigma2;
    if (sigma2 <= 0.0) {
      // Degenerate: every replication agrees with the incumbent everywhere,
      // so the misclassification rate is unbounded and any N suffices.
      out.gamma_hat = std::numeric_limits<double>::infinity();
      out.target_n = 0.0;
      out.status = timed_out ? SaaSizing::time_capped : SaaSizing::ld_satisfied;
      out.wall_time = elapsed();
      return out;
    }
    double scale = 0.0;
    for (const auto& rec : reps) scale += rec.objective;
    scale = std::max(1.0, std::abs(scale / static_cast<double>(reps.size())));
    const double margin = (cfg.epsilon - cfg.delta) * scale;
    out.gamma_hat = margin * margin / (3.0 * sigma2);
    out.target_n = saa_detail::ld_required(inst.n, cfg.alpha, out.gamma_hat);
    if (static_cast<double>(n_scen) >= out.target_n) {
      out.status = SaaSizing::ld_satisfied;
      out.wall_time = elapsed();
      return out;
    }
    if (timed_out || elapsed() >= cfg.time_limit) {
      out.status = SaaSizing::time_capped;
      out.wall_time = elapsed();
      return out;
    }
    if (over_budget) {
      out.status = SaaSizing::n_capped;
      out.wall_time = elapsed();
      return out;
    }
    n_scen *= 2;
  }
}

// Full run: size the scenario count, then replicate until the relative gap
// estimate (mean sampled optimum minus the incumbent's out-of-sample value)
// drops to epsilon.  The incumbent is the candidate with the best
// out-of-sample value; all candidates share one evaluation sample, so their
// comparison uses common random numbers.
inline SaaResult saa_solve(const Instance& inst, const SaaConfig& cfg, std::uint64_t seed) {
  inst.validate();
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed = [&t_start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  const SaaPhase0Result p0 = saa_phase0(inst, cfg, seed);
  SaaResult out;
  out.n = p0.n;
  out.sizing = p0.status;
  out.sizing_target_n = p0.target_n;

  const std::uint64_t eval_seed =
      rng::keyed_u64(seed, saa_detail::kEvalStream, static_cast<std::uint64_t>(p0.n), 0);

  struct Candidate {
    std::vector<double> x;
    SimReport report;
  };
  std::vector<Candidate> candidates;
  std::ptrdiff_t incumbent = -1;

  std::vector<double> vhat;
  vhat.reserve(static_cast<std::size_t>(cfg.m_max));
  for (int m = 0; m < cfg.m_max; ++m) {
    const double remaining = cfg.time_limit - elapsed();
    if (remaining <= 0.0) break;
    const std::uint64_t rep_seed =
        rng::keyed_u64(seed, saa_detail::kCertStream, static_cast<std::uint64_t>(p0.n),
                  static_cast<std::uint64_t>(m));
    auto o = saa_detail::solve_replication(inst, p0.n, rep_seed, cfg.inner_rel_tol, remaining);
    if (!o.ok) {
      ++out.discarded;
      continue;
    }
    vhat.push_back(o.rec.objective);

    // Out-of-sample evaluation for selections not seen before.
    std::ptrdiff_t found = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].x == o.rec.x) {
        found = static_cast<std::ptrdiff_t>(i);
        break;
      }
    }
    if (found < 0) {
      Candidate c;
      c.x = o.rec.x;
      c.report = evaluate_static(c.x, inst, eval_seed, cfg.n_eval);
      candidates.push_back(std::move(c));
      found = static_cast<std::ptrdiff_t>(candidates.size()) - 1;
    }
    if (incumbent < 0 ||
        candidates[static_cast<std::size_t>(found)].report.mean >
            candidates[static_cast<std::size_t>(incumbent)].report.mean) {
      incumbent = found;
    }

    if (static_cast<int>(vhat.size()) < cfg.warmup) continue;
    saa_detail::update_gap_estimate(out, vhat, candidates[static_cast<std::size_t>(incumbent)].report);
    if (out.gap <= cfg.epsilon) {
      out.certified = true;
      break;
    }
  }

  // A budget-starved run still reports its (unstable) gap estimate.
  if (!out.certified && !vhat.empty() && incumbent >= 0) {
    saa_detail::update_gap_estimate(out, vhat, candidates[static_cast<std::size_t>(incumbent)].report);
  }

  out.replications = static_cast<int>(vhat.size());
  if (incumbent >= 0) out.x = candidates[static_cast<std::size_t>(incumbent)].x;
  out.wall_time = elapsed();
  return out;
}

}  // namespace sknap
