#pragma once

// Dense bounded-variable two-phase primal simplex.  Sized for desk-scale
// relaxations (a few hundred rows/columns): the tableau is kept explicitly
// and updated in full at every pivot.  Dantzig pricing with a Bland fallback
// guards against cycling; ties break on the lowest variable index so runs
// are bit-reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sknap {

enum class LpStatus { optimal, infeasible, unbounded, error };

struct LpRow {
  std::vector<std::pair<int, double>> coef;  // (variable index, coefficient)
  char sense = '<';                          // '<', '=', '>'
  double rhs = 0.0;
};

struct LpProblem {
  int num_vars = 0;
  std::vector<double> lower;      // size num_vars; -inf allowed
  std::vector<double> upper;      // size num_vars; +inf allowed
  std::vector<double> objective;  // size num_vars; always maximised
  std::vector<LpRow> rows;
};

struct LpResult {
  LpStatus status = LpStatus::error;
  std::vector<double> x;
  double objective = 0.0;
};

namespace lp_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDualTol = 1e-9;    // reduced-cost optimality tolerance
constexpr double kPivotTol = 1e-10;  // smallest acceptable pivot magnitude
constexpr double kFeasTol = 1e-7;    // primal feasibility tolerance

enum class VStat : std::uint8_t { basic, at_lower, at_upper, free_zero };

class Tableau {
 public:
  explicit Tableau(const LpProblem& p) : n_struct_(p.num_vars) {
    const int m = static_cast<int>(p.rows.size());
    // Column layout: structurals, then one slack per row, then artificials
    // appended on demand.  Slack bounds encode the row sense.
    ncols_ = n_struct_ + m;
    lb_ = p.lower;
    ub_ = p.upper;
    lb_.resize(ncols_, 0.0);
    ub_.resize(ncols_, 0.0);
    cost_.assign(ncols_, 0.0);
    for (int j = 0; j < n_struct_; ++j) cost_[j] = p.objective[j];
    for (int i = 0; i < m; ++i) {
      const int s = n_struct_ + i;
      switch (p.rows[i].sense) {
        case '<': lb_[s] = 0.0;   ub_[s] = kInf; break;
        case '>': lb_[s] = -kInf; ub_[s] = 0.0;  break;
        case '=': lb_[s] = 0.0;   ub_[s] = 0.0;  break;
        default:
          throw std::invalid_argument("LpRow: sense must be '<', '=' or '>'");
      }
    }

    // Nonbasic structural starting point: the finite bound nearest zero.
    vstat_.assign(ncols_, VStat::at_lower);
    for (int j = 0; j < n_struct_; ++j) {
      if (lb_[j] == -kInf && ub_[j] == kInf) {
        vstat_[j] = VStat::free_zero;
      } else if (lb_[j] == -kInf) {
        vstat_[j] = VStat::at_upper;
      } else if (ub_[j] != kInf && std::abs(ub_[j]) < std::abs(lb_[j])) {
        vstat_[j] = VStat::at_upper;
      } else {
        vstat_[j] = VStat::at_lower;
      }
    }

    // Residuals decide whether a slack can start basic or an artificial is
    // needed to restore in-bounds basics.
    basis_.assign(m, -1);
    beta_.assign(m, 0.0);
    std::vector<double> resid(m, 0.0);
    for (int i = 0; i < m; ++i) {
      double r = p.rows[i].rhs;
      for (const auto& [j, a] : p.rows[i].coef) r -= a * nb_value(j);
      resid[i] = r;
    }
    int n_art = 0;
    std::vector<int> art_sign(m, 0);
    for (int i = 0; i < m; ++i) {
      const int s = n_struct_ + i;
      if (resid[i] >= lb_[s] - kFeasTol && resid[i] <= ub_[s] + kFeasTol) {
        basis_[i] = s;
        beta_[i] = std::clamp(resid[i], lb_[s], ub_[s]);
        vstat_[s] = VStat::basic;
      } else {
        art_sign[i] = 1;
        ++n_art;
      }
    }
    first_art_ = ncols_;
    ncols_ += n_art;
    lb_.resize(ncols_, 0.0);
    ub_.resize(ncols_, kInf);
    cost_.resize(ncols_, 0.0);
    vstat_.resize(ncols_, VStat::at_lower);

    T_.assign(static_cast<std::size_t>(m) * ncols_, 0.0);
    for (int i = 0; i < m; ++i) {
      for (const auto& [j, a] : p.rows[i].coef) at(i, j) += a;
      at(i, n_struct_ + i) = 1.0;
    }
    int art = first_art_;
    for (int i = 0; i < m; ++i) {
      if (art_sign[i] == 0) continue;
      const int s = n_struct_ + i;
      const double clamped = std::clamp(resid[i], lb_[s], ub_[s]);
      vstat_[s] = (clamped == lb_[s]) ? VStat::at_lower : VStat::at_upper;
      const double short_fall = resid[i] - clamped;
      if (short_fall < 0.0) {
        // Scale the row so the artificial's basis column is +1, keeping the
        // tableau equal to B^{-1} A.
        for (int j = 0; j < ncols_; ++j) at(i, j) = -at(i, j);
      }
      at(i, art) = 1.0;
      basis_[i] = art;
      beta_[i] = std::abs(short_fall);
      vstat_[art] = VStat::basic;
      ++art;
    }
    m_ = m;
  }

  /// In safe mode the entering column follows Bland's rule from the start,
  /// which trades speed for a deterministic, drift-resistant pivot order.
  LpResult solve(bool safe = false) {
    LpResult out;
    if (first_art_ < ncols_) {
      // Phase 1: maximise -sum(artificials).
      std::vector<double> c1(ncols_, 0.0);
      for (int j = first_art_; j < ncols_; ++j) c1[j] = -1.0;
      const LpStatus s1 = run(c1, safe);
      if (s1 == LpStatus::error) {
        out.status = LpStatus::error;
        return out;
      }
      double infeas = 0.0;
      for (int j = first_art_; j < ncols_; ++j) infeas += value_of(j);
      if (infeas > 1e-7 * std::max(1.0, rhs_scale())) {
        out.status = LpStatus::infeasible;
        return out;
      }
      for (int j = first_art_; j < ncols_; ++j) ub_[j] = 0.0;  // pin to zero
    }
    const LpStatus s2 = run(cost_, safe);
    out.status = s2;
    if (s2 != LpStatus::optimal) return out;
    out.x.assign(n_struct_, 0.0);
    for (int j = 0; j < n_struct_; ++j) out.x[j] = value_of(j);
    out.objective = 0.0;
    for (int j = 0; j < n_struct_; ++j) {
      out.objective += cost_[j] * out.x[j];
    }
    return out;
  }

 private:
  double& at(int i, int j) {
    return T_[static_cast<std::size_t>(i) * ncols_ + j];
  }
  double at(int i, int j) const {
    return T_[static_cast<std::size_t>(i) * ncols_ + j];
  }

  double nb_value(int j) const {
    switch (vstat_[j]) {
      case VStat::at_lower: return lb_[j];
      case VStat::at_upper: return ub_[j];
      case VStat::free_zero: return 0.0;
      case VStat::basic: break;
    }
    return 0.0;
  }

  double value_of(int j) const {
    if (vstat_[j] == VStat::basic) {
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] == j) return beta_[i];
      }
    }
    return nb_value(j);
  }

  double rhs_scale() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) s = std::max(s, std::abs(beta_[i]));
    return s;
  }

  // Reduced costs for the given objective: d = c - c_B^T * T.
  void compute_reduced(const std::vector<double>& c, std::vector<double>& d) {
    d = c;
    for (int i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &T_[static_cast<std::size_t>(i) * ncols_];
      for (int j = 0; j < ncols_; ++j) d[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) d[basis_[i]] = 0.0;
  }

  bool movable(int j) const {
    if (vstat_[j] == VStat::basic) return false;
    if (lb_[j] == ub_[j]) return false;
    return true;
  }

  struct RatioResult {
    double t_star = kInf;
    int leave_row = -1;     // -1 with finite t_star means a bound flip
    int leave_to_upper = 0; // which bound the leaving basic hits
    double best_piv = 0.0;
    double col_max = 0.0;   // largest |entry| of the entering column
  };

  RatioResult ratio_test(int enter, int dir, bool bland) const {
    RatioResult r;
    const double range = ub_[enter] - lb_[enter];
    r.t_star = (vstat_[enter] == VStat::free_zero) ? kInf : range;
    for (int i = 0; i < m_; ++i) {
      const double y = at(i, enter);
      r.col_max = std::max(r.col_max, std::abs(y));
      const double rate = -dir * y;  // d(beta_i)/dt
      if (std::abs(y) < kPivotTol) continue;
      const int k = basis_[i];
      double limit;
      int to_upper;
      if (rate > 0.0) {
        if (ub_[k] == kInf) continue;
        limit = (ub_[k] - beta_[i]) / rate;
        to_upper = 1;
      } else {
        if (lb_[k] == -kInf) continue;
        limit = (lb_[k] - beta_[i]) / rate;
        to_upper = 0;
      }
      limit = std::max(limit, 0.0);  // tolerate tiny infeasibility
      const bool strictly_better = limit < r.t_star - 1e-9;
      const bool tie = std::abs(limit - r.t_star) <= 1e-9;
      bool take = false;
      if (strictly_better) {
        take = true;
      } else if (tie && r.leave_row >= 0) {
        if (bland) {
          take = basis_[i] < basis_[r.leave_row];
        } else if (std::abs(y) > r.best_piv + 1e-12) {
          take = true;
        } else if (std::abs(std::abs(y) - r.best_piv) <= 1e-12 &&
                   basis_[i] < basis_[r.leave_row]) {
          take = true;
        }
      } else if (tie && r.leave_row < 0 && limit < r.t_star + 1e-9) {
        // Tie against a pure bound flip: prefer the pivot only if strictly
        // smaller; keep flips cheap.
        take = limit < r.t_star;
      }
      if (take) {
        r.t_star = std::min(r.t_star, limit);
        r.leave_row = i;
        r.leave_to_upper = to_upper;
        r.best_piv = std::abs(y);
      }
    }
    return r;
  }

  void commit_flip(int enter, int dir, double t_star) {
    for (int i = 0; i < m_; ++i) beta_[i] -= dir * t_star * at(i, enter);
    vstat_[enter] = (dir > 0) ? VStat::at_upper : VStat::at_lower;
  }

  void commit_pivot(int enter, int dir, const RatioResult& rt,
                    std::vector<double>& d) {
    const int leave_row = rt.leave_row;
    const int leave = basis_[leave_row];
    const double enter_new = nb_value(enter) + dir * rt.t_star;
    for (int i = 0; i < m_; ++i) {
      if (i != leave_row) beta_[i] -= dir * rt.t_star * at(i, enter);
    }
    beta_[leave_row] = enter_new;
    vstat_[leave] = rt.leave_to_upper ? VStat::at_upper : VStat::at_lower;
    if (lb_[leave] == -kInf && ub_[leave] == kInf) {
      vstat_[leave] = VStat::free_zero;
    }
    vstat_[enter] = VStat::basic;
    basis_[leave_row] = enter;

    const double piv = at(leave_row, enter);
    double* prow = &T_[static_cast<std::size_t>(leave_row) * ncols_];
    const double inv = 1.0 / piv;
    for (int j = 0; j < ncols_; ++j) prow[j] *= inv;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_row) continue;
      const double f = at(i, enter);
      if (f == 0.0) continue;
      double* row = &T_[static_cast<std::size_t>(i) * ncols_];
      for (int j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
      at(i, enter) = 0.0;  // keep the unit column exact
    }
    const double fd = d[enter];
    if (fd != 0.0) {
      for (int j = 0; j < ncols_; ++j) d[j] -= fd * prow[j];
      d[enter] = 0.0;
    }
  }

  LpStatus run(const std::vector<double>& c, bool safe = false) {
    std::vector<double> d;
    compute_reduced(c, d);
    const long long iter_cap = 20000 + 200LL * (m_ + ncols_);
    int degenerate_run = 0;
    bool bland = safe;
    std::vector<long long> ban_stamp(ncols_, -1);
    for (long long iter = 0; iter < iter_cap; ++iter) {
      // Shed incremental drift in the reduced costs now and then.
      if ((iter & 255) == 255) compute_reduced(c, d);

      // Columns whose best ratio-test pivot is numerically tiny are banned
      // for this iteration and another entering candidate is tried; the
      // least-bad banned candidate is kept as a fallback so an improving
      // pivot is still taken when nothing better exists.
      int fb_enter = -1;
      int fb_dir = +1;
      RatioResult fb_rt;
      double committed_t = 0.0;
      bool committed = false;
      while (true) {
        // Entering variable.
        int enter = -1;
        int dir = +1;
        double best = kDualTol;
        for (int j = 0; j < ncols_; ++j) {
          if (ban_stamp[j] == iter || !movable(j)) continue;
          const VStat st = vstat_[j];
          double score = 0.0;
          int jdir = 0;
          if ((st == VStat::at_lower || st == VStat::free_zero) &&
              d[j] > kDualTol) {
            score = d[j];
            jdir = +1;
          } else if ((st == VStat::at_upper || st == VStat::free_zero) &&
                     d[j] < -kDualTol) {
            score = -d[j];
            jdir = -1;
          } else {
            continue;
          }
          if (bland) {
            enter = j;
            dir = jdir;
            break;
          }
          if (score > best) {
            best = score;
            enter = j;
            dir = jdir;
          }
        }
        if (enter == -1) {
          if (fb_enter < 0) return LpStatus::optimal;
          // Every improving column pivots on a tiny element; take the
          // least-bad one rather than stalling.
          committed_t = fb_rt.t_star;
          commit_pivot(fb_enter, fb_dir, fb_rt, d);
          committed = true;
          break;
        }

        const RatioResult rt = ratio_test(enter, dir, bland);
        if (rt.t_star == kInf) return LpStatus::unbounded;

        if (rt.leave_row >= 0 && (!bland || safe)) {
          const double accept = std::max(1e-7, 1e-6 * rt.col_max);
          if (rt.best_piv < accept) {
            if (rt.best_piv > fb_rt.best_piv) {
              fb_enter = enter;
              fb_dir = dir;
              fb_rt = rt;
            }
            ban_stamp[enter] = iter;
            continue;
          }
        }

        committed_t = rt.t_star;
        if (rt.leave_row < 0) {
          commit_flip(enter, dir, rt.t_star);
        } else {
          commit_pivot(enter, dir, rt, d);
        }
        committed = true;
        break;
      }
      if (!committed) return LpStatus::error;  // unreachable

      degenerate_run = (committed_t <= 1e-11) ? degenerate_run + 1 : 0;
      if (degenerate_run > 64) bland = true;
      if (committed_t > 1e-11 && !safe) bland = false;
    }
#ifdef SKNAP_DEBUG_LP
    std::fprintf(stderr, "simplex iteration cap hit: m=%d ncols=%d\n", m_, ncols_);
#endif
    return LpStatus::error;  // iteration cap: treat as numerical failure
  }

  int n_struct_;
  int ncols_ = 0;
  int m_ = 0;
  int first_art_ = 0;
  std::vector<double> T_;
  std::vector<double> lb_, ub_, cost_, beta_;
  std::vector<int> basis_;
  std::vector<VStat> vstat_;
};

}  // namespace lp_detail

/// Solves max c'x subject to the rows and bounds.  The result's x is sized
/// num_vars.  Verifies the returned point against the original data and
/// downgrades to error status if the feasibility tolerance (1e-6) is broken.
inline LpResult solve_lp(const LpProblem& p) {
  if (static_cast<int>(p.lower.size()) != p.num_vars ||
      static_cast<int>(p.upper.size()) != p.num_vars ||
      static_cast<int>(p.objective.size()) != p.num_vars) {
    throw std::invalid_argument("solve_lp: vector sizes must match num_vars");
  }
  const auto max_violation = [&p](const LpResult& r) {
    double viol = 0.0;
    for (int j = 0; j < p.num_vars; ++j) {
      viol = std::max(viol, p.lower[j] - r.x[j]);
      viol = std::max(viol, r.x[j] - p.upper[j]);
    }
    for (const LpRow& row : p.rows) {
      double lhs = 0.0;
      double scale = std::abs(row.rhs);
      for (const auto& [j, a] : row.coef) {
        lhs += a * r.x[j];
        scale = std::max(scale, std::abs(a * r.x[j]));
      }
      const double slack = row.rhs - lhs;
      const double tol = 1e-6 * std::max(1.0, scale);
      if (row.sense == '<' && slack < -tol) viol = std::max(viol, -slack);
      if (row.sense == '>' && slack > tol) viol = std::max(viol, slack);
      if (row.sense == '=' && std::abs(slack) > tol) {
        viol = std::max(viol, std::abs(slack));
      }
    }
    return viol;
  };
  lp_detail::Tableau tab(p);
  LpResult r = tab.solve();
  if (r.status != LpStatus::optimal) return r;
  double viol = max_violation(r);
  if (viol > 1e-5) {
    // Numerical trouble: retry once under the slower, drift-resistant pivot
    // order before giving up.
    lp_detail::Tableau retry(p);
    LpResult r2 = retry.solve(/*safe=*/true);
    if (r2.status == LpStatus::optimal && max_violation(r2) <= 1e-5) {
      return r2;
    }
  }
  if (viol > 1e-5) {
#ifdef SKNAP_DEBUG_LP
    std::fprintf(stderr, "lp verification failed: viol=%g\n", viol);
    if (const char* path = std::getenv("SKNAP_LP_DUMP")) {
      if (std::FILE* f = std::fopen(path, "w")) {
        std::fprintf(f, "%d %zu\n", p.num_vars, p.rows.size());
        for (int j = 0; j < p.num_vars; ++j) {
          std::fprintf(f, "%.17g %.17g %.17g\n", p.lower[j], p.upper[j],
                       p.objective[j]);
        }
        for (const LpRow& row : p.rows) {
          std::fprintf(f, "%c %.17g %zu", row.sense, row.rhs, row.coef.size());
          for (const auto& [j, a] : row.coef) {
            std::fprintf(f, " %d %.17g", j, a);
          }
          std::fprintf(f, "\n");
        }
        std::fclose(f);
      }
    }
#endif
    r.status = LpStatus::error;  // hard numerical failure
  }
  return r;
}

}  // namespace sknap
