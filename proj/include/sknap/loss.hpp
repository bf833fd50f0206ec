#pragma once

// First-order loss function for the standard normal and piecewise-linear
// lower/upper envelopes of it built from conditional-mean partitions.
//
// A partition splits the real line into W contiguous regions.  Replacing the
// normal variate by its conditional mean inside each region yields a
// piecewise-affine lower bound on the loss (jensen_lb); shifting that bound
// up by the worst-case gap yields an upper bound (edmundson_madanski_ub).
// minimax_partition chooses region boundaries so that the gap is the same in
// every region, which minimises the worst-case gap for a given W.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "normal.hpp"

namespace sknap {

/// E[max(Z - y, 0)] for Z ~ N(0,1).
inline double standard_loss(double y) {
  return norm::pdf(y) - y * norm::sf(y);
}

/// E[max(X - y, 0)] for X ~ N(mu, sigma^2).  sigma == 0 degenerates to
/// max(mu - y, 0).
inline double scaled_loss(double y, double mu, double sigma) {
  if (sigma < 0.0) {
    throw std::invalid_argument("scaled_loss: sigma must be non-negative");
  }
  if (sigma == 0.0) {
    return std::max(mu - y, 0.0);
  }
  return sigma * standard_loss((y - mu) / sigma);
}

/// E[max(y - X, 0)] for X ~ N(mean, sigma^2), via the identity
/// E[max(y-X,0)] = (y - mean) + E[max(X-y,0)].
inline double complementary_loss(double y, double mean, double sigma = 1.0) {
  return (y - mean) + scaled_loss(y, mean, sigma);
}

/// A W-region partition of the real line together with the region
/// probabilities and conditional means.  boundary holds the W-1 interior
/// split points in increasing order; prob[k] and mean[k] describe region k
/// (regions ordered left to right).  max_error is the exact worst-case gap
/// sup_y (standard_loss(y) - jensen_lb(y)) for this partition.
struct LossLinearization {
  int W = 0;
  std::vector<double> prob;
  std::vector<double> mean;
  std::vector<double> boundary;
  double max_error = 0.0;
};

/// Piecewise-affine lower bound on standard_loss induced by the partition:
/// sum_k prob[k] * max(mean[k] - y, 0).
inline double jensen_lb(const LossLinearization& lin, double y) {
  double acc = 0.0;
  for (std::size_t k = lin.mean.size(); k-- > 0;) {
    if (lin.mean[k] <= y) break;  // means are increasing
    acc += lin.prob[k] * (lin.mean[k] - y);
  }
  return acc;
}

/// Upper bound: the lower bound lifted by the worst-case gap.
inline double edmundson_madanski_ub(const LossLinearization& lin, double y) {
  return jensen_lb(lin, y) + lin.max_error;
}

namespace detail {

struct RegionStats {
  double p;    // probability mass of the region
  double m;    // conditional mean
  double err;  // gap between standard_loss and the bound at y = m
};

// Probability of (zl, zr], computed from whichever tail avoids cancellation.
inline double interval_mass(double zl, double zr) {
  if (zl + zr <= 0.0) {
    return norm::cdf(zr) - norm::cdf(zl);
  }
  return norm::sf(zl) - norm::sf(zr);
}

// Region statistics for (zl, zr]; either end may be infinite.  The gap at
// the conditional mean m reduces to a local expression in the region's own
// boundaries:  err = pdf(m) - pdf(zl) + m * (cdf(m) - cdf(zl)).
inline RegionStats region_stats(double zl, double zr) {
  RegionStats r{};
  r.p = interval_mass(zl, zr);
  if (r.p <= 0.0) {
    const double a = std::isinf(zl) ? zr : zl;
    const double b = std::isinf(zr) ? zl : zr;
    r.m = 0.5 * (a + b);
    r.err = 0.0;
    return r;
  }
  r.m = (norm::pdf(zl) - norm::pdf(zr)) / r.p;
  r.err = norm::pdf(r.m) - norm::pdf(zl) + r.m * interval_mass(zl, r.m);
  return r;
}

// Smallest zr > zl such that the gap of region (zl, zr] reaches `target`.
// Returns false if the gap stays below `target` even for zr ~ +inf.
inline bool solve_boundary(double zl, double target, double& zr) {
  const double lo0 = std::isinf(zl) ? -9.0 : zl;
  double hi = lo0;
  double step = 0.5;
  for (int i = 0; i < 64; ++i) {
    hi = lo0 + step;
    if (hi > 9.5) {
      hi = 9.5;
      if (region_stats(zl, hi).err < target) return false;
      break;
    }
    if (region_stats(zl, hi).err >= target) break;
    step *= 2.0;
  }
  double lo = lo0;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo));
       ++i) {
    const double mid = 0.5 * (lo + hi);
    (region_stats(zl, mid).err < target ? lo : hi) = mid;
  }
  zr = 0.5 * (lo + hi);
  return true;
}

// Forward sweep: place W-1 boundaries so that regions 1..W-1 each have gap
// `target`; report the gap of the final region.  Returns false when `target`
// is too large to fit W regions.
inline bool sweep(int W, double target, std::vector<double>& z,
                  double& last_err) {
  z.assign(W - 1, 0.0);
  double zl = -std::numeric_limits<double>::infinity();
  for (int j = 0; j + 1 < W; ++j) {
    if (!solve_boundary(zl, target, z[j])) return false;
    zl = z[j];
  }
  last_err =
      region_stats(zl, std::numeric_limits<double>::infinity()).err;
  return true;
}

// Rebuild prob/mean/max_error from a fixed boundary vector.
inline void fill_from_boundaries(LossLinearization& lin) {
  const int W = lin.W;
  lin.prob.assign(W, 0.0);
  lin.mean.assign(W, 0.0);
  lin.max_error = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  for (int j = 0; j < W; ++j) {
    const double zl = (j == 0) ? -inf : lin.boundary[j - 1];
    const double zr = (j == W - 1) ? inf : lin.boundary[j];
    const RegionStats s = region_stats(zl, zr);
    lin.prob[j] = s.p;
    lin.mean[j] = s.m;
    lin.max_error = std::max(lin.max_error, s.err);
  }
}

}  // namespace detail

/// Equal worst-case-gap partition with W regions.  Boundaries are symmetric
/// around zero and the gap is identical in every region (within 1e-9).
inline LossLinearization minimax_partition(int W) {
  if (W < 1) {
    throw std::invalid_argument("minimax_partition: W must be >= 1");
  }
  LossLinearization lin;
  lin.W = W;
  if (W == 1) {
    lin.prob = {1.0};
    lin.mean = {0.0};
    lin.max_error = standard_loss(0.0);
    return lin;
  }

  // Outer bisection on the common gap: the final region's gap decreases as
  // the target grows, so balance last_err == target.
  double lo = 0.0;
  double hi = standard_loss(0.0);
  std::vector<double> z;
  double last_err = 0.0;
  for (int it = 0; it < 120 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool ok = detail::sweep(W, mid, z, last_err);
    if (ok && last_err > mid) {
      lo = mid;  // target too small: final region still has slack
    } else {
      hi = mid;
    }
  }
  if (!detail::sweep(W, lo, z, last_err)) {
    throw std::runtime_error("minimax_partition: sweep failed at W=" +
                             std::to_string(W));
  }

  // The optimum is symmetric; average mirrored boundaries to remove the
  // one-sided bisection bias (and pin the middle boundary of even W at 0).
  lin.boundary.resize(W - 1);
  for (int i = 0; i + 1 < W; ++i) {
    lin.boundary[i] = 0.5 * (z[i] - z[W - 2 - i]);
  }
  detail::fill_from_boundaries(lin);

  // Verify the equal-gap property actually holds.
  double emax = 0.0, emin = std::numeric_limits<double>::infinity();
  const double inf = std::numeric_limits<double>::infinity();
  for (int j = 0; j < W; ++j) {
    const double zl = (j == 0) ? -inf : lin.boundary[j - 1];
    const double zr = (j == W - 1) ? inf : lin.boundary[j];
    const double e = detail::region_stats(zl, zr).err;
    emax = std::max(emax, e);
    emin = std::min(emin, e);
  }
  if (emax - emin > 1e-9) {
    throw std::runtime_error(
        "minimax_partition: gaps failed to equalise at W=" +
        std::to_string(W) + " (spread " + std::to_string(emax - emin) + ")");
  }
  lin.max_error = emax;
  return lin;
}

/// Partition whose regions all carry probability 1/W
/// (boundaries at the i/W quantiles).
inline LossLinearization equal_probability_partition(int W) {
  if (W < 1) {
    throw std::invalid_argument(
        "equal_probability_partition: W must be >= 1");
  }
  LossLinearization lin;
  lin.W = W;
  if (W == 1) {
    lin.prob = {1.0};
    lin.mean = {0.0};
    lin.max_error = standard_loss(0.0);
    return lin;
  }
  lin.boundary.resize(W - 1);
  for (int i = 0; i + 1 < W; ++i) {
    lin.boundary[i] = norm::quantile(static_cast<double>(i + 1) / W);
  }
  detail::fill_from_boundaries(lin);
  // The masses are 1/W by construction; store them exactly.
  for (int j = 0; j < W; ++j) lin.prob[j] = 1.0 / W;
  return lin;
}

/// Reverse partial sums over regions:  A[i] = sum_{k>=i} prob[k]*mean[k] and
/// B[i] = sum_{k>=i} prob[k], plus the largest A value.  These are the
/// coefficients of the supporting planes of jensen_lb:
/// jensen_lb(y) = max(0, max_i (A[i] - y*B[i])).
struct PartialMassSums {
  std::vector<double> A;
  std::vector<double> B;
  double A_max = 0.0;
};

inline PartialMassSums partial_mass_sums(const LossLinearization& lin) {
  const int W = lin.W;
  PartialMassSums r;
  r.A.assign(W, 0.0);
  r.B.assign(W, 0.0);
  double a = 0.0, b = 0.0;
  for (int i = W - 1; i >= 0; --i) {
    a += lin.prob[i] * lin.mean[i];
    b += lin.prob[i];
    r.A[i] = a;
    r.B[i] = b;
    r.A_max = std::max(r.A_max, a);
  }
  return r;
}

/// Memoising store of minimax partitions, optionally backed by a plain-text
/// table file so the (one-time) bisection cost is paid once per machine.
/// Rows with W <= 128 are persisted; anything larger is kept in memory only.
class LossCache {
 public:
  LossCache() = default;
  explicit LossCache(std::string path) : path_(std::move(path)) {
    if (!path_.empty() && std::filesystem::exists(path_)) {
      load_file();
    }
  }

  static constexpr int kMaxPersistedW = 128;

  const LossLinearization& get(int W) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = rows_.find(W);
    if (it != rows_.end()) return it->second;
    it = rows_.emplace(W, minimax_partition(W)).first;
    if (!path_.empty() && W <= kMaxPersistedW) save_file();
    return it->second;
  }

  bool contains(int W) const {
    std::lock_guard<std::mutex> lock(mu_);
    return rows_.count(W) > 0;
  }

  const std::string& path() const { return path_; }

 private:
  static void put(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, " %.17g", v);
    out += buf;
  }

  void save_file() const {
    std::string text = "sknap loss-table v1\n";
    for (const auto& [W, lin] : rows_) {
      if (W > kMaxPersistedW) continue;
      text += "W " + std::to_string(W) + " max_error";
      put(text, lin.max_error);
      text += "\nboundary";
      for (double z : lin.boundary) put(text, z);
      text += "\nprob";
      for (double p : lin.prob) put(text, p);
      text += "\nmean";
      for (double m : lin.mean) put(text, m);
      text += "\n";
    }
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) {
        throw std::runtime_error("LossCache: cannot write " + tmp);
      }
      out << text;
    }
    std::filesystem::rename(tmp, path_);
  }

  void load_file() {
    std::ifstream in(path_);
    if (!in) {
      throw std::runtime_error("LossCache: cannot read " + path_);
    }
    std::string header;
    std::getline(in, header);
    if (header != "sknap loss-table v1") {
      throw std::runtime_error("LossCache: unrecognised table header in " +
                               path_);
    }
    std::string kw;
    while (in >> kw) {
      if (kw != "W") {
        throw std::runtime_error("LossCache: malformed table row in " +
                                 path_);
      }
      LossLinearization lin;
      in >> lin.W;
      in >> kw >> lin.max_error;  // "max_error" <value>
      lin.boundary.resize(lin.W - 1);
      in >> kw;  // "boundary"
      for (double& z : lin.boundary) in >> z;
      lin.prob.resize(lin.W);
      in >> kw;  // "prob"
      for (double& p : lin.prob) in >> p;
      lin.mean.resize(lin.W);
      in >> kw;  // "mean"
      for (double& m : lin.mean) in >> m;
      if (!in || lin.W < 1) {
        throw std::runtime_error("LossCache: truncated table row in " +
                                 path_);
      }
      rows_[lin.W] = std::move(lin);
    }
  }

  mutable std::mutex mu_;
  std::map<int, LossLinearization> rows_;
  std::string path_;
};

}  // namespace sknap
