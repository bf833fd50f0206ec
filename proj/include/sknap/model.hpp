#pragma once

// Solver-agnostic MILP representation plus a deterministic branch-and-bound
// engine over LP relaxations.
//
// Feature set (deliberately desk-scale):
//   * continuous and binary variables with bounds;
//   * sparse linear rows (<=, =, >=);
//   * piecewise-linear equality constraints out = f(in), enforced by
//     interval (SOS2-style) branching on the input variable.  Concave f gets
//     a tight relaxation automatically: chord rows below, lazy upper-envelope
//     segment cuts above;
//   * lazy cut oracles invoked at every LP optimum; returned cuts are global
//     and never deleted;
//   * optional incumbent completer: a callback that tries to turn a relaxed
//     point into a feasible assignment (used by model builders that know the
//     problem's structure to speed up incumbent discovery).
//
// Everything is single-threaded and tie-broken by index, so a given model
// yields a bit-identical solve every run.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "simplex.hpp"

namespace sknap {

enum class VarKind { continuous, binary };

struct ModelVariable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lower = 0.0;
  double upper = 0.0;
};

struct ModelRow {
  std::vector<std::pair<int, double>> coef;
  char sense = '<';
  double rhs = 0.0;
  std::string name;
};

struct PwlEquality {
  int out_var = -1;
  int in_var = -1;
  std::vector<double> breakpoint;  // strictly increasing
  std::vector<double> value;
};

struct ModelCut {
  std::vector<std::pair<int, double>> coef;
  char sense = '<';
  double rhs = 0.0;
};

using CutOracle =
    std::function<std::vector<ModelCut>(const std::vector<double>&)>;
// Given the relaxation point, produce a feasible completion; returns false
// when no completion is available.
using IncumbentCompleter =
    std::function<bool(const std::vector<double>&, std::vector<double>&)>;

enum class SolveStatus { optimal, feasible_limit, infeasible, unbounded, error };

struct Solution {
  SolveStatus status = SolveStatus::error;
  std::vector<double> x;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  long long nodes = 0;
  long long cuts = 0;
  double wall_time = 0.0;
};

class MilpModel {
 public:
  int add_continuous(std::string name, double lower, double upper) {
    if (lower > upper) {
      throw std::invalid_argument("add_continuous: lower > upper for " +
                                  name);
    }
    vars_.push_back({std::move(name), VarKind::continuous, lower, upper});
    objective_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_binary(std::string name) {
    vars_.push_back({std::move(name), VarKind::binary, 0.0, 1.0});
    objective_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
  }

  void add_row(std::vector<std::pair<int, double>> coef, char sense,
               double rhs, std::string name = {}) {
    for (const auto& [j, a] : coef) {
      check_var(j, "add_row");
      (void)a;
    }
    if (sense != '<' && sense != '=' && sense != '>') {
      throw std::invalid_argument("add_row: sense must be '<', '=' or '>'");
    }
    rows_.push_back({std::move(coef), sense, rhs, std::move(name)});
  }

  void add_pwl_equality(int out_var, int in_var,
                        std::vector<double> breakpoints,
                        std::vector<double> values) {
    check_var(out_var, "add_pwl_equality");
    check_var(in_var, "add_pwl_equality");
    if (breakpoints.size() < 2 || breakpoints.size() != values.size()) {
      throw std::invalid_argument(
          "add_pwl_equality: need matching lists with >= 2 points");
    }
    for (std::size_t k = 1; k < breakpoints.size(); ++k) {
      if (!(breakpoints[k] > breakpoints[k - 1])) {
        throw std::invalid_argument(
            "add_pwl_equality: breakpoints must be strictly increasing");
      }
    }
    pwl_.push_back({out_var, in_var, std::move(breakpoints),
                    std::move(values)});
  }

  void add_cut_oracle(CutOracle oracle) {
    oracles_.push_back(std::move(oracle));
  }

  void set_incumbent_completer(IncumbentCompleter c) {
    completer_ = std::move(c);
  }

  void set_objective_coefficient(int var, double coef) {
    check_var(var, "set_objective_coefficient");
    objective_[var] = coef;
  }

  void set_maximize(bool maximize) { maximize_ = maximize; }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  const std::vector<ModelVariable>& variables() const { return vars_; }
  const std::vector<ModelRow>& rows() const { return rows_; }
  const std::vector<PwlEquality>& pwl_equalities() const { return pwl_; }
  const std::vector<double>& objective() const { return objective_; }
  bool maximize() const { return maximize_; }

  double objective_value(const std::vector<double>& x) const {
    double v = 0.0;
    for (int j = 0; j < num_vars(); ++j) v += objective_[j] * x[j];
    return v;
  }

  /// Linear interpolation of PWL equality e at input value v (clamped to
  /// the breakpoint range).
  double pwl_eval(int e, double v) const {
    const PwlEquality& p = pwl_[e];
    const auto& bp = p.breakpoint;
    if (v <= bp.front()) return p.value.front();
    if (v >= bp.back()) return p.value.back();
    const auto it = std::upper_bound(bp.begin(), bp.end(), v);
    const auto k = static_cast<std::size_t>(it - bp.begin());
    const double t = (v - bp[k - 1]) / (bp[k] - bp[k - 1]);
    return (1.0 - t) * p.value[k - 1] + t * p.value[k];
  }

  /// Full feasibility check: bounds, integrality, rows, PWL equalities.
  bool check_feasible(const std::vector<double>& x, double tol = 1e-6) const {
    if (static_cast<int>(x.size()) != num_vars()) return false;
    for (int j = 0; j < num_vars(); ++j) {
      if (x[j] < vars_[j].lower - tol || x[j] > vars_[j].upper + tol) {
        return false;
      }
      if (vars_[j].kind == VarKind::binary &&
          std::abs(x[j] - std::round(x[j])) > tol) {
        return false;
      }
    }
    for (const ModelRow& r : rows_) {
      double lhs = 0.0;
      double scale = std::abs(r.rhs);
      for (const auto& [j, a] : r.coef) {
        lhs += a * x[j];
        scale = std::max(scale, std::abs(a * x[j]));
      }
      const double t = tol * std::max(1.0, scale);
      if (r.sense == '<' && lhs > r.rhs + t) return false;
      if (r.sense == '>' && lhs < r.rhs - t) return false;
      if (r.sense == '=' && std::abs(lhs - r.rhs) > t) return false;
    }
    for (std::size_t e = 0; e < pwl_.size(); ++e) {
      const PwlEquality& p = pwl_[e];
      if (std::abs(x[p.out_var] -
                   pwl_eval(static_cast<int>(e), x[p.in_var])) > tol) {
        return false;
      }
    }
    return true;
  }

  /// Line-oriented text dump (names have whitespace replaced by '_';
  /// oracles and completers are runtime-only and not serialised).
  std::string dump() const {
    std::string out = "sknap milp v1\n";
    out += maximize_ ? "sense max\n" : "sense min\n";
    out += "vars " + std::to_string(num_vars()) + "\n";
    char buf[64];
    auto put = [&](double v) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    };
    for (int j = 0; j < num_vars(); ++j) {
      const ModelVariable& v = vars_[j];
      out += "v " + std::to_string(j);
      out += (v.kind == VarKind::binary) ? " b" : " c";
      put(v.lower);
      put(v.upper);
      put(objective_[j]);
      out += " " + sanitize(v.name) + "\n";
    }
    out += "rows " + std::to_string(rows_.size()) + "\n";
    for (const ModelRow& r : rows_) {
      out += "r ";
      out += r.sense;
      put(r.rhs);
      out += " " + std::to_string(r.coef.size());
      for (const auto& [j, a] : r.coef) {
        out += " " + std::to_string(j);
        put(a);
      }
      out += " " + sanitize(r.name.empty() ? std::string("-") : r.name);
      out += "\n";
    }
    out += "pwl " + std::to_string(pwl_.size()) + "\n";
    for (const PwlEquality& p : pwl_) {
      out += "p " + std::to_string(p.out_var) + " " +
             std::to_string(p.in_var) + " " +
             std::to_string(p.breakpoint.size()) + "\nbp";
      for (double b : p.breakpoint) put(b);
      out += "\nval";
      for (double v : p.value) put(v);
      out += "\n";
    }
    return out;
  }

  static MilpModel load(const std::string& text) {
    std::istringstream in(text);
    std::string line, tok;
    std::getline(in, line);
    if (line != "sknap milp v1") {
      throw std::runtime_error("MilpModel::load: unrecognised header");
    }
    MilpModel m;
    std::string sense_word;
    in >> tok >> sense_word;  // "sense" max|min
    m.maximize_ = (sense_word == "max");
    int n = 0;
    in >> tok >> n;  // "vars" N
    for (int i = 0; i < n; ++i) {
      int idx;
      std::string kind, name;
      double lb, ub, obj;
      in >> tok >> idx >> kind >> lb >> ub >> obj >> name;
      const int j = (kind == "b") ? m.add_binary(name)
                                  : m.add_continuous(name, lb, ub);
      m.objective_[j] = obj;
    }
    int nrows = 0;
    in >> tok >> nrows;
    for (int i = 0; i < nrows; ++i) {
      char sense;
      double rhs;
      int nnz;
      std::string name;
      in >> tok >> sense >> rhs >> nnz;
      std::vector<std::pair<int, double>> coef(nnz);
      for (auto& [j, a] : coef) in >> j >> a;
      in >> name;
      m.add_row(std::move(coef), sense, rhs, name == "-" ? "" : name);
    }
    int npwl = 0;
    in >> tok >> npwl;
    for (int i = 0; i < npwl; ++i) {
      int out_var, in_var, k;
      in >> tok >> out_var >> in_var >> k;
      std::vector<double> bp(k), val(k);
      in >> tok;  // "bp"
      for (double& b : bp) in >> b;
      in >> tok;  // "val"
      for (double& v : val) in >> v;
      m.add_pwl_equality(out_var, in_var, std::move(bp), std::move(val));
    }
    if (!in) throw std::runtime_error("MilpModel::load: truncated input");
    return m;
  }

  const std::vector<CutOracle>& cut_oracles() const { return oracles_; }
  const IncumbentCompleter& completer() const { return completer_; }

 private:
  static std::string sanitize(const std::string& s) {
    std::string t = s;
    for (char& c : t) {
      if (c == ' ' || c == '\t' || c == '\n') c = '_';
    }
    return t.empty() ? std::string("-") : t;
  }

  void check_var(int j, const char* where) const {
    if (j < 0 || j >= num_vars()) {
      throw std::invalid_argument(std::string(where) +
                                  ": variable index out of range");
    }
  }

  std::vector<ModelVariable> vars_;
  std::vector<ModelRow> rows_;
  std::vector<PwlEquality> pwl_;
  std::vector<CutOracle> oracles_;
  IncumbentCompleter completer_;
  std::vector<double> objective_;
  bool maximize_ = true;
};

namespace bnb_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntTol = 1e-6;
constexpr double kPwlTol = 1e-6;
constexpr double kCutTol = 1e-6;

struct NodeState {
  long long id = 0;
  double bound = kInf;  // in internal (maximise) sense
  std::vector<double> lower, upper;
  // Per PWL equality: active breakpoint index range [first, second].
  std::vector<std::pair<int, int>> range;
  // Cut-pool indices that were in the parent's final LP: children start
  // from the cuts that supported the parent's relaxation.
  std::vector<std::size_t> active;
};

struct NodeOrder {
  bool operator()(const NodeState& a, const NodeState& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
    return a.id > b.id;                                // then FIFO
  }
};

class Engine {
 public:
  Engine(const MilpModel& m, double rel_tol, double time_limit)
      : model_(m), rel_tol_(rel_tol), time_limit_(time_limit) {
    start_ = std::chrono::steady_clock::now();
    const int n = m.num_vars();
    sign_ = m.maximize() ? 1.0 : -1.0;
    obj_.resize(n);
    for (int j = 0; j < n; ++j) obj_[j] = sign_ * m.objective()[j];
    concave_.resize(m.pwl_equalities().size());
    for (std::size_t e = 0; e < concave_.size(); ++e) {
      concave_[e] = is_concave(m.pwl_equalities()[e]);
    }
  }

  Solution run(const std::vector<double>* warm_start) {
    Solution sol;
    if (warm_start != nullptr && model_.check_feasible(*warm_start)) {
      offer_incumbent(*warm_start);
    }

    NodeState root;
    root.id = next_id_++;
    root.lower.resize(model_.num_vars());
    root.upper.resize(model_.num_vars());
    for (int j = 0; j < model_.num_vars(); ++j) {
      root.lower[j] = model_.variables()[j].lower;
      root.upper[j] = model_.variables()[j].upper;
    }
    for (const PwlEquality& p : model_.pwl_equalities()) {
      root.range.emplace_back(0,
                              static_cast<int>(p.breakpoint.size()) - 1);
    }

    std::priority_queue<NodeState, std::vector<NodeState>, NodeOrder> open;
    open.push(std::move(root));
    double pruned_bound = -kInf;  // best bound among gap-pruned nodes
    bool lp_error = false;
    bool root_unbounded = false;
    bool hit_limit = false;

    while (!open.empty()) {
      if (elapsed() > time_limit_) {
        hit_limit = true;
        break;
      }
      NodeState node = open.top();
      open.pop();
      if (should_prune(node.bound)) {
        pruned_bound = std::max(pruned_bound, node.bound);
        continue;
      }
      ++sol.nodes;

      double lp_obj = 0.0;
      std::vector<double> x;
      const int lp_state = solve_node(node, lp_obj, x);
      if (lp_state == kLpError) {
        lp_error = true;
        break;
      }
      if (lp_state == kLpUnbounded) {
        if (sol.nodes == 1) root_unbounded = true;
        lp_error = !root_unbounded;
        break;
      }
      if (lp_state == kLpInfeasible) continue;
      const double bound = std::min(node.bound, lp_obj);
      if (should_prune(bound)) {
        pruned_bound = std::max(pruned_bound, bound);
        continue;
      }

      // Completion heuristic: ask the model for a feasible point near x.
      if (model_.completer()) {
        std::vector<double> completed;
        if (model_.completer()(x, completed) &&
            model_.check_feasible(completed)) {
          offer_incumbent(completed);
        }
      }

      // Choose a branching entity: most fractional binary vs worst PWL
      // violation, whichever is larger; indices break ties.
      int frac_var = -1;
      double frac = kIntTol;
      for (int j = 0; j < model_.num_vars(); ++j) {
        if (model_.variables()[j].kind != VarKind::binary) continue;
        if (node.lower[j] == node.upper[j]) continue;
        const double f = std::min(x[j], 1.0 - x[j]);
        if (f > frac) {
          frac = f;
          frac_var = j;
        }
      }
      int viol_pwl = -1;
      double viol = kPwlTol;
      for (std::size_t e = 0; e < model_.pwl_equalities().size(); ++e) {
        const PwlEquality& p = model_.pwl_equalities()[e];
        const double w =
            std::abs(x[p.out_var] - model_.pwl_eval(static_cast<int>(e),
                                                    x[p.in_var]));
        if (w > viol) {
          viol = w;
          viol_pwl = static_cast<int>(e);
        }
      }

      if (frac_var < 0 && viol_pwl < 0) {
        offer_incumbent(x);
        // The relaxation may have been cut off early; a point that still
        // violates an oracle cut does not certify this node, so requeue it
        // (the violated cuts just joined the pool and will bite next time).
        if (!oracle_clean(x)) {
          NodeState again = std::move(node);
          again.id = next_id_++;
          again.bound = bound;
          again.active = last_active_;
          open.push(std::move(again));
          continue;
        }
        pruned_bound = std::max(pruned_bound, bound);
        continue;
      }

      if (viol_pwl >= 0 && (frac_var < 0 || viol >= frac)) {
        // Interval branching on the PWL input variable.
        const PwlEquality& p = model_.pwl_equalities()[viol_pwl];
        auto [klo, khi] = node.range[viol_pwl];
        const double v_hat = x[p.in_var];
        int split = klo + 1;
        double best_d = kInf;
        for (int k = klo + 1; k <= khi - 1; ++k) {
          const double d = std::abs(p.breakpoint[k] - v_hat);
          if (d < best_d) {
            best_d = d;
            split = k;
          }
        }
        NodeState left = node;
        left.id = next_id_++;
        left.bound = bound;
        left.range[viol_pwl] = {klo, split};
        left.active = last_active_;
        NodeState right = node;
        right.id = next_id_++;
        right.bound = bound;
        right.range[viol_pwl] = {split, khi};
        right.active = last_active_;
        open.push(std::move(left));
        open.push(std::move(right));
      } else {
        NodeState zero = node;
        zero.id = next_id_++;
        zero.bound = bound;
        zero.upper[frac_var] = 0.0;
        zero.active = last_active_;
        NodeState one = node;
        one.id = next_id_++;
        one.bound = bound;
        one.lower[frac_var] = 1.0;
        one.active = last_active_;
        open.push(std::move(zero));
        open.push(std::move(one));
      }
    }

    // Assemble the report in the model's objective sense.
    sol.cuts = static_cast<long long>(cuts_.size());
    sol.wall_time = elapsed();
    double open_bound = pruned_bound;
    while (!open.empty()) {
      open_bound = std::max(open_bound, open.top().bound);
      open.pop();
    }
    if (lp_error) {
      sol.status = SolveStatus::error;
    } else if (root_unbounded) {
      sol.status = SolveStatus::unbounded;
    } else if (hit_limit) {
      sol.status = SolveStatus::feasible_limit;
    } else {
      sol.status = have_incumbent_ ? SolveStatus::optimal
                                   : SolveStatus::infeasible;
    }
    if (have_incumbent_) {
      sol.x = incumbent_;
      sol.objective = model_.objective_value(incumbent_);
      const double ub = std::max(inc_value_, open_bound);
      sol.best_bound = sign_ * ub;
      sol.gap = (ub - inc_value_) / std::max(1e-10, std::abs(inc_value_));
    } else {
      sol.objective = -sign_ * kInf;
      sol.best_bound = (open_bound == -kInf) ? sol.objective
                                             : sign_ * open_bound;
      sol.gap = kInf;
    }
    return sol;
  }

 private:
  static constexpr int kLpOk = 0;
  static constexpr int kLpInfeasible = 1;
  static constexpr int kLpUnbounded = 2;
  static constexpr int kLpError = 3;

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

  static bool is_concave(const PwlEquality& p) {
    double prev = kInf;
    for (std::size_t k = 1; k < p.breakpoint.size(); ++k) {
      const double s = (p.value[k] - p.value[k - 1]) /
                       (p.breakpoint[k] - p.breakpoint[k - 1]);
      if (s > prev + 1e-12) return false;
      prev = s;
    }
    return true;
  }

  bool should_prune(double bound) const {
    if (!have_incumbent_) return false;
    return bound - inc_value_ <=
           rel_tol_ * std::max(1e-10, std::abs(inc_value_));
  }

  double internal_value(const std::vector<double>& x) const {
    double v = 0.0;
    for (int j = 0; j < model_.num_vars(); ++j) v += obj_[j] * x[j];
    return v;
  }

  // Candidate incumbents are vetted against the cut oracles as well as the
  // materialised rows; oracle violations become global cuts and reject the
  // candidate.
  bool oracle_clean(const std::vector<double>& x) {
    bool clean = true;
    for (const CutOracle& oracle : model_.cut_oracles()) {
      for (ModelCut& c : oracle(x)) {
        double lhs = 0.0;
        for (const auto& [j, a] : c.coef) lhs += a * x[j];
        const bool violated = (c.sense == '<' && lhs > c.rhs + kCutTol) ||
                              (c.sense == '>' && lhs < c.rhs - kCutTol) ||
                              (c.sense == '=' &&
                               std::abs(lhs - c.rhs) > kCutTol);
        if (violated) {
          cuts_.push_back(std::move(c));
          clean = false;
        }
      }
    }
    return clean;
  }

  void offer_incumbent(const std::vector<double>& x) {
    std::vector<double> snapped = x;
    for (int j = 0; j < model_.num_vars(); ++j) {
      if (model_.variables()[j].kind == VarKind::binary) {
        snapped[j] = std::round(snapped[j]);
      }
    }
    // Prefer the integral-snapped point; fall back to the raw point when
    // snapping breaks a row or an oracle constraint.
    const std::vector<double>* candidates[2] = {&snapped, &x};
    for (const std::vector<double>* cand : candidates) {
      if (!model_.check_feasible(*cand)) continue;
      const double v = internal_value(*cand);
      if (have_incumbent_ && v <= inc_value_) return;
      if (!oracle_clean(*cand)) continue;
      incumbent_ = *cand;
      inc_value_ = v;
      have_incumbent_ = true;
      return;
    }
  }

  // Builds and solves the node LP, looping on oracle cuts.  Returns one of
  // the kLp* states; on kLpOk fills obj/x with the relaxation optimum.
  int solve_node(const NodeState& node, double& obj, std::vector<double>& x) {
    const int n = model_.num_vars();
    LpProblem lp;
    lp.num_vars = n;
    lp.lower = node.lower;
    lp.upper = node.upper;
    lp.objective = obj_;
    for (const ModelRow& r : model_.rows()) {
      lp.rows.push_back({r.coef, r.sense, r.rhs});
    }

    // PWL interval rows and bounds.
    for (std::size_t e = 0; e < model_.pwl_equalities().size(); ++e) {
      const PwlEquality& p = model_.pwl_equalities()[e];
      const auto [klo, khi] = node.range[e];
      lp.lower[p.in_var] = std::max(lp.lower[p.in_var], p.breakpoint[klo]);
      lp.upper[p.in_var] = std::min(lp.upper[p.in_var], p.breakpoint[khi]);
      double vmin = kInf, vmax = -kInf;
      for (int k = klo; k <= khi; ++k) {
        vmin = std::min(vmin, p.value[k]);
        vmax = std::max(vmax, p.value[k]);
      }
      lp.lower[p.out_var] = std::max(lp.lower[p.out_var], vmin);
      lp.upper[p.out_var] = std::min(lp.upper[p.out_var], vmax);
      const double slope = (p.value[khi] - p.value[klo]) /
                           (p.breakpoint[khi] - p.breakpoint[klo]);
      const double intercept = p.value[klo] - slope * p.breakpoint[klo];
      if (khi == klo + 1) {
        // Single segment: the equality is affine on this node.
        lp.rows.push_back(
            {{{p.out_var, 1.0}, {p.in_var, -slope}}, '=', intercept});
      } else if (concave_[e]) {
        // Chord from below; upper envelope arrives as lazy global cuts.
        lp.rows.push_back(
            {{{p.out_var, 1.0}, {p.in_var, -slope}}, '>', intercept});
      }
    }

    for (int j = 0; j < n; ++j) {
      if (lp.lower[j] > lp.upper[j] + 1e-12) return kLpInfeasible;
      if (lp.lower[j] > lp.upper[j]) lp.lower[j] = lp.upper[j];
    }

    // Only cuts inherited from the parent or violated at some relaxation
    // optimum of this node enter the LP; the rest of the global pool is
    // separated by enumeration, which keeps the tableau small while
    // yielding the same final bound (the loop only exits once no pooled or
    // oracle cut is violated).
    const std::size_t base_rows = lp.rows.size();
    std::vector<std::size_t> active;
    std::vector<char> in_active(cuts_.size(), 0);
    for (const std::size_t idx : node.active) {
      if (!in_active[idx]) {
        in_active[idx] = 1;
        active.push_back(idx);
      }
    }
    constexpr int kMaxCutRounds = 50;
    for (int round = 0; round < kMaxCutRounds; ++round) {
      lp.rows.resize(base_rows);
      for (const std::size_t idx : active) {
        const ModelCut& c = cuts_[idx];
        lp.rows.push_back({c.coef, c.sense, c.rhs});
      }
      const LpResult r = solve_lp(lp);
      if (r.status == LpStatus::infeasible) return kLpInfeasible;
      if (r.status == LpStatus::unbounded) return kLpUnbounded;
      if (r.status == LpStatus::error) {
#ifdef SKNAP_DEBUG_LP
        std::fprintf(stderr, "node lp error: round=%d rows=%zu active=%zu\n",
                     round, lp.rows.size(), active.size());
#endif
        return kLpError;
      }

      std::size_t added = 0;
      // Pool separation first: re-activate the most violated stored cuts.
      // Batching a few per round keeps the tableau small; the loop repeats
      // until the point satisfies the whole pool.
      in_active.resize(cuts_.size(), 0);
      constexpr std::size_t kActivationBatch = 8;
      std::array<std::pair<double, std::size_t>, kActivationBatch> batch;
      std::size_t batch_size = 0;
      for (std::size_t i = 0; i < cuts_.size(); ++i) {
        if (in_active[i]) continue;
        const ModelCut& c = cuts_[i];
        double lhs = 0.0;
        for (const auto& [j, a] : c.coef) lhs += a * r.x[j];
        double viol = 0.0;
        if (c.sense == '<') viol = lhs - c.rhs;
        else if (c.sense == '>') viol = c.rhs - lhs;
        else viol = std::abs(lhs - c.rhs);
        if (viol <= kCutTol) continue;
        if (batch_size < kActivationBatch) {
          batch[batch_size++] = {viol, i};
        } else {
          auto worst = std::min_element(batch.begin(), batch.end());
          if (viol > worst->first) *worst = {viol, i};
        }
      }
      for (std::size_t b = 0; b < batch_size; ++b) {
        active.push_back(batch[b].second);
        in_active[batch[b].second] = 1;
        ++added;
      }
      if (added > 0) {
        if (elapsed() > time_limit_) {
          obj = r.objective;
          x = r.x;
          last_active_ = std::move(active);
          return kLpOk;  // let the main loop notice the clock
        }
        continue;
      }

      // Internal envelope oracle for concave PWL equalities.
      for (std::size_t e = 0; e < model_.pwl_equalities().size(); ++e) {
        if (!concave_[e]) continue;
        const PwlEquality& p = model_.pwl_equalities()[e];
        const double v_hat = r.x[p.in_var];
        const double s_hat = r.x[p.out_var];
        const auto it = std::upper_bound(p.breakpoint.begin(),
                                         p.breakpoint.end(), v_hat);
        int k = static_cast<int>(it - p.breakpoint.begin());
        k = std::clamp(k, 1, static_cast<int>(p.breakpoint.size()) - 1);
        const double slope = (p.value[k] - p.value[k - 1]) /
                             (p.breakpoint[k] - p.breakpoint[k - 1]);
        const double cutoff =
            p.value[k - 1] + slope * (v_hat - p.breakpoint[k - 1]);
        if (s_hat > cutoff + kPwlTol) {
          active.push_back(cuts_.size());
          in_active.push_back(1);
          cuts_.push_back(
              {{{p.out_var, 1.0}, {p.in_var, -slope}},
               '<',
               p.value[k - 1] - slope * p.breakpoint[k - 1]});
          ++added;
        }
      }
      // User oracles at the relaxation optimum.
      for (const CutOracle& oracle : model_.cut_oracles()) {
        for (ModelCut& c : oracle(r.x)) {
          double lhs = 0.0;
          for (const auto& [j, a] : c.coef) lhs += a * r.x[j];
          const bool violated =
              (c.sense == '<' && lhs > c.rhs + kCutTol) ||
              (c.sense == '>' && lhs < c.rhs - kCutTol) ||
              (c.sense == '=' && std::abs(lhs - c.rhs) > kCutTol);
          if (violated) {
            active.push_back(cuts_.size());
            in_active.push_back(1);
            cuts_.push_back(std::move(c));
            ++added;
          }
        }
      }
      if (added == 0) {
        obj = r.objective;
        x = r.x;
        // Children inherit only the binding cuts; slack ones stay in the
        // pool and are re-separated on demand.
        last_active_.clear();
        for (const std::size_t idx : active) {
          const ModelCut& c = cuts_[idx];
          double lhs = 0.0;
          for (const auto& [j, a] : c.coef) lhs += a * r.x[j];
          if (std::abs(lhs - c.rhs) <= 1e-7 * std::max(1.0, std::abs(c.rhs))) {
            last_active_.push_back(idx);
          }
        }
        return kLpOk;
      }
      if (round + 1 >= kMaxCutRounds || elapsed() > time_limit_) {
        // Stopping the cut loop early keeps the bound valid (the missing
        // cuts could only tighten it); branching resumes the work below.
        obj = r.objective;
        x = r.x;
        last_active_ = std::move(active);
        return kLpOk;
      }
    }
    return kLpError;  // unreachable
  }

  const MilpModel& model_;
  double rel_tol_;
  double time_limit_;
  std::chrono::steady_clock::time_point start_;
  double sign_ = 1.0;
  std::vector<double> obj_;  // internal maximise objective
  std::vector<bool> concave_;
  std::vector<ModelCut> cuts_;  // global pool, never deleted
  std::vector<std::size_t> last_active_;  // cuts in the last solved node LP
  std::vector<double> incumbent_;
  double inc_value_ = -kInf;
  bool have_incumbent_ = false;
  long long next_id_ = 0;
};

}  // namespace bnb_detail

/// Branch-and-bound solve.  rel_tol is the relative optimality gap at which
/// a node (and finally the tree) is considered closed.
inline Solution solve(const MilpModel& m, double rel_tol = 1e-4,
                      double time_limit = 1e30) {
  bnb_detail::Engine engine(m, rel_tol, time_limit);
  return engine.run(nullptr);
}

/// As solve, but seeds the incumbent from `start` when it checks out as
/// feasible (infeasible starts are ignored).
inline Solution solve_with_warm_start(const MilpModel& m,
                                      const std::vector<double>& start,
                                      double rel_tol = 1e-4,
                                      double time_limit = 1e30) {
  bnb_detail::Engine engine(m, rel_tol, time_limit);
  return engine.run(&start);
}

}  // namespace sknap
