#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sknap::la {

// Dense symmetric matrices are stored row-major as n*n vectors.

inline std::vector<double> mat_vec(const std::vector<double>& a, int n,
                                   const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += a[static_cast<std::size_t>(i) * n + j] * x[j];
    y[static_cast<std::size_t>(i)] = row;
  }
  return y;
}

inline double quad_form(const std::vector<double>& a, int n,
                        const std::vector<double>& x) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += a[static_cast<std::size_t>(i) * n + j] * x[j];
    total += row * x[i];
  }
  return total;
}

// In-place lower Cholesky after adding `jitter` to the diagonal; the upper
// triangle is zeroed. Returns false when a pivot is not strictly positive.
inline bool cholesky_in_place(std::vector<double>& a, int n, double jitter = 0.0) {
  const auto at = [&a, n](int i, int j) -> double& {
    return a[static_cast<std::size_t>(i) * n + j];
  };
  if (jitter != 0.0) {
    for (int i = 0; i < n; ++i) at(i, i) += jitter;
  }
  for (int j = 0; j < n; ++j) {
    double d = at(j, j);
    for (int k = 0; k < j; ++k) d -= at(j, k) * at(j, k);
    if (!(d > 0.0)) return false;
    const double lj = std::sqrt(d);
    at(j, j) = lj;
    for (int i = j + 1; i < n; ++i) {
      double s = at(i, j);
      for (int k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
      at(i, j) = s / lj;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) at(i, j) = 0.0;
  }
  return true;
}

// Factor a copy, escalating the diagonal jitter through powers of ten up to
// max_jitter when the matrix is only semidefinite. Throws if all attempts fail.
inline std::vector<double> cholesky_factor(const std::vector<double>& a, int n,
                                           double max_jitter = 1e-10) {
  std::vector<double> work = a;
  if (cholesky_in_place(work, n, 0.0)) return work;
  for (double jitter = 1e-14; jitter <= max_jitter * (1.0 + 1e-12); jitter *= 10.0) {
    work = a;
    if (cholesky_in_place(work, n, jitter)) return work;
  }
  throw std::runtime_error("cholesky_factor: matrix is not positive semidefinite");
}

// Solve L y = b in place (L lower triangular with positive diagonal).
inline void forward_solve(const std::vector<double>& l, int n, std::vector<double>& b) {
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = 0; j < i; ++j) s -= l[static_cast<std::size_t>(i) * n + j] * b[j];
    b[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
  }
}

// Solve L^T x = y in place.
inline void back_solve_transposed(const std::vector<double>& l, int n,
                                  std::vector<double>& y) {
  for (int i = n - 1; i >= 0; --i) {
    double s = y[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= l[static_cast<std::size_t>(j) * n + i] * y[j];
    y[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
  }
}

// Solve A x = b where l is the Cholesky factor of A.
inline std::vector<double> cholesky_solve(const std::vector<double>& l, int n,
                                          std::vector<double> b) {
  forward_solve(l, n, b);
  back_solve_transposed(l, n, b);
  return b;
}

// All eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
// returned sorted ascending.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
  const auto at = [&a, n](int i, int j) -> double& {
    return a[static_cast<std::size_t>(i) * n + j];
  };
  double frob = 0.0;
  for (double v : a) frob += v * v;
  frob = std::sqrt(frob);
  const double stop = std::max(1e-300, 1e-14 * frob);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (std::sqrt(2.0 * off) <= stop) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = 0.5 * (at(q, q) - at(p, p)) / apq;
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = at(p, p);
        const double aqq = at(q, q);
        at(p, p) = app - t * apq;
        at(q, q) = aqq + t * apq;
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(p, k) = at(k, p);
          at(k, q) = s * akp + c * akq;
          at(q, k) = at(k, q);
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

inline double smallest_eigenvalue(const std::vector<double>& a, int n) {
  return symmetric_eigenvalues(a, n).front();
}

}  // namespace sknap::la
