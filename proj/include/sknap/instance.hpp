#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sknap {

struct InstanceMeta {
  std::string type;         // generator type tag (U, WC, SC, ...), may be empty
  double R = 0.0;           // data range used at generation time
  double cv = 0.0;          // coefficient of variation sigma_i / mu_i
  double rho = 0.0;         // correlation level, 0 when independent
  int h = 0;                // capacity level index, 0 when not applicable
  std::uint64_t seed = 0;   // generator seed
  std::string correlation;  // "constant" or "banded" when rho > 0
};

// One stochastic knapsack instance: n items with expected profit
// contributions `values`, random weights with means `mu` and standard
// deviations `sigma` (optionally correlated through `cov`), a capacity, and
// a per-unit shortage cost charged on expected excess weight.
struct Instance {
  int n = 0;
  std::vector<double> values;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> cov;  // optional n*n row-major; empty means independent
  double capacity = 0.0;
  double shortage_cost = 0.0;
  std::string distribution;  // normal | multivariate-normal | gamma | lognormal
  InstanceMeta meta;

  bool correlated() const { return !cov.empty(); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("instance: n must be >= 1");
    const auto sz = static_cast<std::size_t>(n);
    if (values.size() != sz || mu.size() != sz || sigma.size() != sz) {
      throw std::invalid_argument("instance: values/mu/sigma must have n entries");
    }
    for (double s : sigma) {
      if (!(s > 0.0)) throw std::invalid_argument("instance: sigma entries must be positive");
    }
    for (double m : mu) {
      if (!std::isfinite(m)) throw std::invalid_argument("instance: mu entries must be finite");
    }
    if (!(capacity > 0.0)) throw std::invalid_argument("instance: capacity must be positive");
    if (!(shortage_cost > 0.0)) {
      throw std::invalid_argument("instance: shortage_cost must be positive");
    }
    const bool known = distribution == "normal" ||
                       distribution == "multivariate-normal" ||
                       distribution == "gamma" || distribution == "lognormal";
    if (!known) throw std::invalid_argument("instance: unknown distribution '" + distribution + "'");
    if (cov.empty()) {
      if (distribution == "multivariate-normal") {
        throw std::invalid_argument("instance: multivariate-normal requires a covariance matrix");
      }
      return;
    }
    if (distribution != "multivariate-normal") {
      throw std::invalid_argument("instance: covariance requires distribution multivariate-normal");
    }
    if (cov.size() != sz * sz) {
      throw std::invalid_argument("instance: covariance must be n*n row-major");
    }
    double scale = 0.0;
    for (double v : cov) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < n; ++i) {
      const double dii = cov[static_cast<std::size_t>(i) * sz + i];
      const double want = sigma[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(i)];
      if (std::abs(dii - want) > 1e-9 * std::max(1.0, want)) {
        throw std::invalid_argument("instance: covariance diagonal must equal sigma^2");
      }
      for (int j = i + 1; j < n; ++j) {
        const double d = cov[static_cast<std::size_t>(i) * sz + j] -
                         cov[static_cast<std::size_t>(j) * sz + i];
        if (std::abs(d) > 1e-12 * std::max(1.0, scale)) {
          throw std::invalid_argument("instance: covariance must be symmetric");
        }
      }
    }
  }
};

namespace json_detail {

inline void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void append_array(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != 0) out += ',';
    append_number(out, v[i]);
  }
  out += ']';
}

inline void append_string(std::string& out, const std::string& s) {
  out += '"';
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (static_cast<unsigned char>(ch) >= 0x20) {
      out += ch;
    }
  }
  out += '"';
}

}  // namespace json_detail

// Deterministic writer: fixed key order, numbers at 17 significant digits,
// so equal instances serialise to byte-identical text.
inline std::string write_json(const Instance& inst) {
  inst.validate();
  using json_detail::append_array;
  using json_detail::append_number;
  using json_detail::append_string;
  std::string out;
  out += "{\n  \"n\": " + std::to_string(inst.n) + ",\n  \"values\": ";
  append_array(out, inst.values);
  out += ",\n  \"mu\": ";
  append_array(out, inst.mu);
  out += ",\n  \"sigma\": ";
  append_array(out, inst.sigma);
  if (inst.correlated()) {
    out += ",\n  \"cov\": ";
    append_array(out, inst.cov);
  }
  out += ",\n  \"capacity\": ";
  append_number(out, inst.capacity);
  out += ",\n  \"shortage_cost\": ";
  append_number(out, inst.shortage_cost);
  out += ",\n  \"distribution\": ";
  append_string(out, inst.distribution);
  out += ",\n  \"metadata\": {\"type\": ";
  append_string(out, inst.meta.type);
  out += ", \"R\": ";
  append_number(out, inst.meta.R);
  out += ", \"cv\": ";
  append_number(out, inst.meta.cv);
  out += ", \"rho\": ";
  append_number(out, inst.meta.rho);
  out += ", \"h\": " + std::to_string(inst.meta.h);
  out += ", \"seed\": " + std::to_string(inst.meta.seed);
  if (!inst.meta.correlation.empty()) {
    out += ", \"correlation\": ";
    append_string(out, inst.meta.correlation);
  }
  out += "}\n}\n";
  return out;
}

inline Instance read_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Instance inst;
  inst.n = j.at("n").get<int>();
  inst.values = j.at("values").get<std::vector<double>>();
  inst.mu = j.at("mu").get<std::vector<double>>();
  inst.sigma = j.at("sigma").get<std::vector<double>>();
  if (j.contains("cov")) inst.cov = j.at("cov").get<std::vector<double>>();
  inst.capacity = j.at("capacity").get<double>();
  inst.shortage_cost = j.at("shortage_cost").get<double>();
  inst.distribution = j.at("distribution").get<std::string>();
  if (j.contains("metadata")) {
    const auto& m = j.at("metadata");
    inst.meta.type = m.value("type", std::string());
    inst.meta.R = m.value("R", 0.0);
    inst.meta.cv = m.value("cv", 0.0);
    inst.meta.rho = m.value("rho", 0.0);
    inst.meta.h = m.value("h", 0);
    inst.meta.seed = m.value("seed", std::uint64_t{0});
    inst.meta.correlation = m.value("correlation", std::string());
  }
  inst.validate();
  return inst;
}

inline void save_json(const Instance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_json: cannot open '" + path + "' for writing");
  const std::string text = write_json(inst);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("save_json: write failed for '" + path + "'");
}

inline Instance load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_json: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_json_text(buf.str());
}

// Compact identifier built from the metadata, used in result tables.
inline std::string instance_label(const Instance& inst) {
  std::ostringstream out;
  out << (inst.meta.type.empty() ? std::string("inst") : inst.meta.type);
  out << "-n" << inst.n;
  out << "-cv" << inst.meta.cv;
  if (inst.meta.rho > 0.0) out << "-rho" << inst.meta.rho;
  if (inst.meta.h > 0) out << "-h" << inst.meta.h;
  out << "-s" << inst.meta.seed;
  return out.str();
}

}  // namespace sknap
