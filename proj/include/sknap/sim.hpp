#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sknap/instance.hpp"
#include "sknap/linalg.hpp"
#include "sknap/sampling.hpp"

namespace sknap {

struct SimReport {
  double mean = 0.0;
  double se = 0.0;     // sample standard deviation / sqrt(runs)
  int runs = 0;        // paths that completed successfully
  int failures = 0;    // paths aborted by a policy exception or budget stop
  double p5 = 0.0;     // nearest-rank per-run profit quantiles
  double p50 = 0.0;
  double p95 = 0.0;
};

namespace sim_detail {

// Fixed-partition pairwise summation: deterministic rounding independent of
// accumulation-loop fusion, and far smaller error growth than a running sum.
inline double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const auto last = static_cast<double>(sorted.size() - 1);
  auto idx = static_cast<std::ptrdiff_t>(std::llround(p * last));
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
  return sorted[static_cast<std::size_t>(idx)];
}

inline SimReport summarize(std::vector<double> profits, int failures) {
  SimReport rep;
  rep.failures = failures;
  rep.runs = static_cast<int>(profits.size());
  if (profits.empty()) return rep;
  const auto n = profits.size();
  rep.mean = pairwise_sum(profits.data(), n) / static_cast<double>(n);
  if (n > 1) {
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = profits[i] - rep.mean;
      sq[i] = d * d;
    }
    const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
    rep.se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
  std::sort(profits.begin(), profits.end());
  rep.p5 = nearest_rank(profits, 0.05);
  rep.p50 = nearest_rank(profits, 0.50);
  rep.p95 = nearest_rank(profits, 0.95);
  return rep;
}

}  // namespace sim_detail

inline constexpr int kDefaultStaticRuns = 100000;
inline constexpr int kDefaultPolicyPaths = 200;

// Monte-Carlo estimate of E[phi]'x - c E[max(omega'x - C, 0)] for a fixed
// selection x, using one stratified column per selected dimension so the
// draws are common across alternatives evaluated with the same seed.
inline SimReport evaluate_static(const std::vector<double>& x, const Instance& inst,
                                 std::uint64_t seed, int runs = kDefaultStaticRuns) {
  if (static_cast<int>(x.size()) != inst.n) {
    throw std::invalid_argument("evaluate_static: selection size differs from instance");
  }
  const SampleStream stream(seed, runs, inst.n);
  double base = 0.0;
  for (int i = 0; i < inst.n; ++i) base += inst.values[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];

  std::vector<double> load(static_cast<std::size_t>(runs), 0.0);
  if (!inst.correlated()) {
    for (int i = 0; i < inst.n; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      if (xi == 0.0) continue;
      const std::vector<double> u = stream.uniform_column(i);
      for (int r = 0; r < runs; ++r) {
        load[static_cast<std::size_t>(r)] +=
            xi * marginal_weight_quantile(inst, i, u[static_cast<std::size_t>(r)]);
      }
    }
  } else {
    const auto n = static_cast<std::size_t>(inst.n);
    const std::vector<double> l = la::cholesky_factor(inst.cov, inst.n, 1e-10);
    double mean_load = 0.0;
    for (int i = 0; i < inst.n; ++i) mean_load += x[static_cast<std::size_t>(i)] * inst.mu[static_cast<std::size_t>(i)];
    // x' (mu + L z) = x'mu + (L^T x) . z, so only one pass per dimension.
    std::vector<double> t(n, 0.0);
    for (int j = 0; j < inst.n; ++j) {
      double s = 0.0;
      for (int i = j; i < inst.n; ++i) {
        s += x[static_cast<std::size_t>(i)] * l[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
      }
      t[static_cast<std::size_t>(j)] = s;
    }
    for (double& v : load) v = mean_load;
    for (int j = 0; j < inst.n; ++j) {
      const double tj = t[static_cast<std::size_t>(j)];
      if (tj == 0.0) continue;
      const std::vector<double> z = stream.normal_column(j);
      for (int r = 0; r < runs; ++r) load[static_cast<std::size_t>(r)] += tj * z[static_cast<std::size_t>(r)];
    }
  }

  std::vector<double> profits(static_cast<std::size_t>(runs));
  const double c = inst.shortage_cost;
  const double cap = inst.capacity;
  for (int r = 0; r < runs; ++r) {
    const double over = load[static_cast<std::size_t>(r)] - cap;
    profits[static_cast<std::size_t>(r)] = base - (over > 0.0 ? c * over : 0.0);
  }
  return sim_detail::summarize(std::move(profits), 0);
}

// What a sequential policy observes before deciding on item `index`:
// the remaining capacity and the realised weights of all earlier items
// (observed whether or not those items were included).
struct PolicyState {
  int index = 0;
  double residual = 0.0;
  const std::vector<double>& realised;
};

using Policy = std::function<bool(const PolicyState&)>;

// Simulate a sequential inclusion policy over pre-drawn joint sample paths,
// revealing each weight after its decision. Drawing the whole path up front
// and revealing it one item at a time is distributionally identical to
// drawing each weight conditionally on the realised history. The terminal
// adjustment c*min(q,0) charges capacity overruns at the shortage cost.
// `resolve_budget_seconds` bounds total wall time: paths not started in
// time are counted as failures.
inline SimReport evaluate_policy(const Policy& policy, const Instance& inst, std::uint64_t seed,
                                 int paths = kDefaultPolicyPaths,
                                 double resolve_budget_seconds = 1e30) {
  if (!policy) throw std::invalid_argument("evaluate_policy: empty policy");
  const SampleStream stream(seed, paths, inst.n);
  const std::vector<double> w = draw_weight_matrix(inst, stream);
  const auto n = static_cast<std::size_t>(inst.n);
  std::vector<double> profits;
  profits.reserve(static_cast<std::size_t>(paths));
  int failures = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int p = 0; p < paths; ++p) {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    if (elapsed.count() > resolve_budget_seconds) {
      failures += paths - p;
      break;
    }
    std::vector<double> realised;
    realised.reserve(n);
    double q = inst.capacity;
    double v = 0.0;
    bool ok = true;
    for (int i = 0; i < inst.n; ++i) {
      bool take = false;
      try {
        take = policy(PolicyState{i, q, realised});
      } catch (...) {
        ok = false;
        break;
      }
      const double wi = w[static_cast<std::size_t>(p) * n + static_cast<std::size_t>(i)];
      if (take) {
        v += inst.values[static_cast<std::size_t>(i)];
        q -= wi;
      }
      realised.push_back(wi);
    }
    if (!ok) {
      ++failures;
      continue;
    }
    if (q < 0.0) v += inst.shortage_cost * q;
    profits.push_back(v);
  }
  return sim_detail::summarize(std::move(profits), failures);
}

// Wrap a fixed selection as a policy that ignores every observation.
inline Policy static_policy(std::vector<double> x) {
  return [x = std::move(x)](const PolicyState& s) {
    return x.at(static_cast<std::size_t>(s.index)) > 0.5;
  };
}

}  // namespace sknap
