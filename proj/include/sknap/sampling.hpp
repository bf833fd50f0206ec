#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sknap/distributions.hpp"
#include "sknap/instance.hpp"
#include "sknap/linalg.hpp"
#include "sknap/normal.hpp"
#include "sknap/rng.hpp"

namespace sknap {

// Latin-hypercube sample stream with common random numbers: the stratified
// uniforms for dimension d are a pure function of (seed, runs, d), so any
// two alternatives evaluated on the same stream see bit-identical draws in
// every dimension, no matter which dimensions they actually touch or in
// which order columns are requested.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, int runs, int dims)
      : seed_(seed), runs_(runs), dims_(dims) {
    if (runs < 1) throw std::invalid_argument("SampleStream: runs must be >= 1");
    if (dims < 1) throw std::invalid_argument("SampleStream: dims must be >= 1");
  }

  std::uint64_t seed() const { return seed_; }
  int runs() const { return runs_; }
  int dims() const { return dims_; }

  // One stratified-uniform column: a random permutation of the `runs` strata,
  // each jittered uniformly inside its stratum. Every value is strictly
  // inside (0,1) and every stratum appears exactly once.
  std::vector<double> uniform_column(int dim) const {
    check_dim(dim);
    std::vector<std::uint32_t> perm(static_cast<std::size_t>(runs_));
    std::iota(perm.begin(), perm.end(), 0u);
    rng::Stream shuffler(seed_, static_cast<std::uint64_t>(dim), kPermField);
    for (int k = runs_ - 1; k > 0; --k) {
      const auto j = static_cast<std::size_t>(shuffler.below(static_cast<std::uint64_t>(k) + 1));
      std::swap(perm[static_cast<std::size_t>(k)], perm[j]);
    }
    std::vector<double> u(static_cast<std::size_t>(runs_));
    for (int r = 0; r < runs_; ++r) {
      const double jitter = rng::keyed_uniform01(seed_, static_cast<std::uint64_t>(dim),
                                                 kJitterField, static_cast<std::uint64_t>(r));
      u[static_cast<std::size_t>(r)] =
          (static_cast<double>(perm[static_cast<std::size_t>(r)]) + jitter) / runs_;
    }
    return u;
  }

  // The same column pushed through the standard normal quantile.
  std::vector<double> normal_column(int dim) const {
    std::vector<double> u = uniform_column(dim);
    for (double& v : u) v = norm::quantile(v);
    return u;
  }

 private:
  static constexpr std::uint64_t kPermField = 101;
  static constexpr std::uint64_t kJitterField = 102;

  void check_dim(int dim) const {
    if (dim < 0 || dim >= dims_) throw std::invalid_argument("SampleStream: dimension out of range");
  }

  std::uint64_t seed_;
  int runs_;
  int dims_;
};

// Marginal inverse CDF of weight i under the instance's distribution family.
inline double marginal_weight_quantile(const Instance& inst, int i, double u) {
  const auto k = static_cast<std::size_t>(i);
  const double mean = inst.mu[k];
  const double sd = inst.sigma[k];
  if (inst.distribution == "gamma") {
    return dist::gamma_quantile_mc(u, mean, sd / mean);
  }
  if (inst.distribution == "lognormal") {
    return dist::lognormal_quantile_mc(u, mean, sd / mean);
  }
  // normal and multivariate-normal marginals
  return mean + sd * norm::quantile(u);
}

// Full runs x n weight matrix (row-major, one run per row). Independent
// families map each stratified column through its marginal quantile;
// correlated instances push stratified normals through the Cholesky factor
// of the covariance.
inline std::vector<double> draw_weight_matrix(const Instance& inst, const SampleStream& stream) {
  if (stream.dims() < inst.n) {
    throw std::invalid_argument("draw_weight_matrix: stream has too few dimensions");
  }
  const int runs = stream.runs();
  const auto n = static_cast<std::size_t>(inst.n);
  std::vector<double> w(static_cast<std::size_t>(runs) * n);
  if (!inst.correlated()) {
    for (int i = 0; i < inst.n; ++i) {
      const std::vector<double> u = stream.uniform_column(i);
      for (int r = 0; r < runs; ++r) {
        w[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(i)] =
            marginal_weight_quantile(inst, i, u[static_cast<std::size_t>(r)]);
      }
    }
    return w;
  }
  const std::vector<double> l = la::cholesky_factor(inst.cov, inst.n, 1e-10);
  std::vector<std::vector<double>> z(n);
  for (int i = 0; i < inst.n; ++i) z[static_cast<std::size_t>(i)] = stream.normal_column(i);
  for (int r = 0; r < runs; ++r) {
    for (int i = 0; i < inst.n; ++i) {
      double v = inst.mu[static_cast<std::size_t>(i)];
      for (int j = 0; j <= i; ++j) {
        v += l[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] *
             z[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
      }
      w[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(i)] = v;
    }
  }
  return w;
}

}  // namespace sknap
