#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sknap/instance.hpp"
#include "sknap/rng.hpp"

namespace sknap {

// The nine benchmark families. Expected weights and expected profit
// contributions are drawn over a data range R with varying degrees of
// correlation between the two.
enum class InstanceType { U, WC, SC, ISC, ASC, SS, USW, PC, C };

inline const char* type_name(InstanceType t) {
  switch (t) {
    case InstanceType::U: return "U";
    case InstanceType::WC: return "WC";
    case InstanceType::SC: return "SC";
    case InstanceType::ISC: return "ISC";
    case InstanceType::ASC: return "ASC";
    case InstanceType::SS: return "SS";
    case InstanceType::USW: return "USW";
    case InstanceType::PC: return "PC";
    case InstanceType::C: return "C";
  }
  throw std::invalid_argument("type_name: unknown instance type");
}

inline InstanceType type_from_name(const std::string& name) {
  if (name == "U") return InstanceType::U;
  if (name == "WC") return InstanceType::WC;
  if (name == "SC") return InstanceType::SC;
  if (name == "ISC") return InstanceType::ISC;
  if (name == "ASC") return InstanceType::ASC;
  if (name == "SS") return InstanceType::SS;
  if (name == "USW") return InstanceType::USW;
  if (name == "PC") return InstanceType::PC;
  if (name == "C") return InstanceType::C;
  throw std::invalid_argument("type_from_name: unknown instance type '" + name + "'");
}

struct GeneratorConfig {
  InstanceType type = InstanceType::U;
  double R = 100.0;     // data range for expected weights and values
  int n = 25;           // item count
  double cv = 0.1;      // coefficient of variation sigma_i / mu_i
  int H = 10;           // number of capacity levels
  int h = 5;            // chosen capacity level in 1..H
  double rho = 0.0;     // correlation level; 0 keeps weights independent
  std::string correlation = "banded";  // "banded" or "constant" when rho > 0
  std::string distribution = "normal"; // normal | gamma | lognormal
  double d = 0.0;       // PC/C shape parameter; 0 picks the family default
  std::uint64_t seed = 1;
  std::uint64_t index = 0;  // instance index within a batch, part of the key
};

// Capacity ladder level h of H over the total expected weight.
inline double capacity_level(double sum_mean_weights, int H, int h) {
  return sum_mean_weights * static_cast<double>(h) / static_cast<double>(H + 1);
}

namespace gen_detail {

constexpr std::uint64_t kWeightField = 1;
constexpr std::uint64_t kValueField = 2;

inline double pc_value(double mean_weight, double d) {
  return d * std::ceil(mean_weight / d);
}

inline double circle_value(double mean_weight, double R, double d) {
  const double off = mean_weight - 2.0 * R;
  return d * std::sqrt(4.0 * R * R - off * off);
}

}  // namespace gen_detail

// Draw one benchmark instance. All uniforms come from a counter-based
// generator keyed by (seed, index, field, item), so the same configuration
// reproduces the same instance bit for bit regardless of draw order, and the
// capacity level h only moves the capacity, never the item draws.
inline Instance generate(const GeneratorConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("generate: n must be >= 1");
  if (!(cfg.R > 1.0)) throw std::invalid_argument("generate: R must exceed 1");
  if (!(cfg.cv > 0.0)) throw std::invalid_argument("generate: cv must be positive");
  if (cfg.H < 1 || cfg.h < 1 || cfg.h > cfg.H) {
    throw std::invalid_argument("generate: capacity level h must lie in 1..H");
  }
  if (cfg.rho < 0.0 || cfg.rho >= 1.0) {
    throw std::invalid_argument("generate: rho must lie in [0,1)");
  }
  const bool correlated = cfg.rho > 0.0;
  if (correlated && cfg.correlation != "banded" && cfg.correlation != "constant") {
    throw std::invalid_argument("generate: correlation must be 'banded' or 'constant'");
  }
  if (cfg.distribution != "normal" && cfg.distribution != "gamma" &&
      cfg.distribution != "lognormal") {
    throw std::invalid_argument("generate: distribution must be normal, gamma, or lognormal");
  }
  if (correlated && cfg.distribution != "normal") {
    throw std::invalid_argument("generate: correlated weights require the normal family");
  }

  using gen_detail::kValueField;
  using gen_detail::kWeightField;
  const double R = cfg.R;
  const auto u_weight = [&cfg](int i) {
    return rng::keyed_uniform01(cfg.seed, cfg.index, kWeightField,
                                static_cast<std::uint64_t>(i));
  };
  const auto u_value = [&cfg](int i) {
    return rng::keyed_uniform01(cfg.seed, cfg.index, kValueField,
                                static_cast<std::uint64_t>(i));
  };

  Instance inst;
  inst.n = cfg.n;
  inst.values.resize(static_cast<std::size_t>(cfg.n));
  inst.mu.resize(static_cast<std::size_t>(cfg.n));
  inst.sigma.resize(static_cast<std::size_t>(cfg.n));

  for (int i = 0; i < cfg.n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    double mu = 0.0;
    double value = 0.0;
    switch (cfg.type) {
      case InstanceType::U:
        mu = 1.0 + (R - 1.0) * u_weight(i);
        value = 1.0 + (R - 1.0) * u_value(i);
        break;
      case InstanceType::WC: {
        mu = 1.0 + (R - 1.0) * u_weight(i);
        const double lo = std::max(mu - R / 10.0, 1.0);
        value = lo + (2.0 * R / 10.0) * u_value(i);
        break;
      }
      case InstanceType::SC:
        mu = 1.0 + (R - 1.0) * u_weight(i);
        value = mu + R / 10.0;
        break;
      case InstanceType::ISC:
        value = 1.0 + (R - 1.0) * u_value(i);
        mu = value + R / 10.0;
        break;
      case InstanceType::ASC: {
        mu = 1.0 + (R - 1.0) * u_weight(i);
        const double lo = mu + R / 10.0 - R / 500.0;
        value = std::max(lo + (2.0 * R / 500.0) * u_value(i), 1.0);
        break;
      }
      case InstanceType::SS:
        mu = 1.0 + (R - 1.0) * u_weight(i);
        value = mu;
        break;
      case InstanceType::USW:
        mu = R + 10.0 * u_weight(i);
        value = 1.0 + (R - 1.0) * u_value(i);
        break;
      case InstanceType::PC: {
        mu = 1.0 + (R - 1.0) * u_weight(i);
        const double d = cfg.d > 0.0 ? cfg.d : 3.0;
        value = gen_detail::pc_value(mu, d);
        break;
      }
      case InstanceType::C: {
        mu = 1.0 + (R - 1.0) * u_weight(i);
        const double d = cfg.d > 0.0 ? cfg.d : 2.0 / 3.0;
        value = gen_detail::circle_value(mu, R, d);
        break;
      }
    }
    inst.mu[k] = mu;
    inst.values[k] = value;
    inst.sigma[k] = cfg.cv * mu;
  }

  double total_mu = 0.0;
  for (double m : inst.mu) total_mu += m;
  inst.capacity = capacity_level(total_mu, cfg.H, cfg.h);
  inst.shortage_cost = 10.0;
  inst.distribution = correlated ? "multivariate-normal" : cfg.distribution;

  if (correlated) {
    const auto n = static_cast<std::size_t>(cfg.n);
    inst.cov.assign(n * n, 0.0);
    for (int i = 0; i < cfg.n; ++i) {
      for (int j = 0; j < cfg.n; ++j) {
        const double si = inst.sigma[static_cast<std::size_t>(i)];
        const double sj = inst.sigma[static_cast<std::size_t>(j)];
        double r = 1.0;
        if (i != j) {
          r = cfg.correlation == "banded" ? std::pow(cfg.rho, std::abs(i - j)) : cfg.rho;
        }
        inst.cov[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = r * si * sj;
      }
    }
  }

  inst.meta.type = type_name(cfg.type);
  inst.meta.R = cfg.R;
  inst.meta.cv = cfg.cv;
  inst.meta.rho = cfg.rho;
  inst.meta.h = cfg.h;
  inst.meta.seed = cfg.seed;
  if (correlated) inst.meta.correlation = cfg.correlation;
  inst.validate();
  return inst;
}

// Result of folding a per-unit salvage value into the profit coefficients:
// modified expected profits, the reduced shortage cost, and the constant
// term (salvage * capacity) dropped from the objective.
struct ProfitTransform {
  std::vector<double> values;
  double shortage_cost = 0.0;
  double dropped_constant = 0.0;
};

// With per-unit revenues pi, salvage s_hat on unused capacity, and shortage
// cost c_hat, the objective is equivalent (up to the constant s_hat * C) to
// one with profits (pi_i - s_hat) * E[omega_i] and shortage cost c_hat - s_hat.
inline ProfitTransform transform_profit(const std::vector<double>& pi, double s_hat,
                                        double c_hat, const std::vector<double>& mean_weights,
                                        double capacity) {
  if (pi.size() != mean_weights.size()) {
    throw std::invalid_argument("transform_profit: pi and mean_weights sizes differ");
  }
  if (!(s_hat < c_hat)) {
    throw std::invalid_argument("transform_profit: salvage must be below the shortage cost");
  }
  ProfitTransform out;
  out.values.resize(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    out.values[i] = (pi[i] - s_hat) * mean_weights[i];
  }
  out.shortage_cost = c_hat - s_hat;
  out.dropped_constant = s_hat * capacity;
  return out;
}

}  // namespace sknap
