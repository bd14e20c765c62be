#pragma once

// Brute-force reference implementations. They share no code with the library
// beyond the data types, so agreement is evidence rather than tautology.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "modlab/measures.hpp"
#include "modlab/space.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Solves the square system A x = b by Gaussian elimination with partial
/// pivoting; empty when A is numerically singular.
inline std::optional<std::vector<double>> solve_square(Matrix A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (std::abs(A[piv][c]) < 1e-12) return std::nullopt;
    std::swap(A[piv], A[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= A[i][i];
  return b;
}

/// min c^T x  s.t.  G x >= h,  x >= 0, by enumerating every basis of n active
/// constraints. Assumes the feasible set is pointed (x >= 0 guarantees it) and
/// the objective bounded below on it; returns +inf when infeasible.
inline double vertex_min(const std::vector<double>& c, const Matrix& G, const std::vector<double>& h) {
  const std::size_t n = c.size();
  const std::size_t m = G.size();
  // Constraint k < m is row k of G; k >= m is x_{k-m} >= 0.
  const std::size_t total = m + n;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(n);
  // Iterate over all n-subsets of {0..total-1} in lexicographic order.
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  if (n > total) return best;
  while (true) {
    Matrix A(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t k = pick[r];
      if (k < m) {
        A[r] = G[k];
        b[r] = h[k];
      } else {
        A[r][k - m] = 1.0;
      }
    }
    if (auto x = solve_square(A, b)) {
      bool feasible = true;
      for (double v : *x) feasible = feasible && v >= -1e-10;
      for (std::size_t k = 0; k < m && feasible; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += G[k][j] * (*x)[j];
        feasible = s >= h[k] - 1e-10;
      }
      if (feasible) {
        double obj = 0.0;
        for (std::size_t j = 0; j < n; ++j) obj += c[j] * (*x)[j];
        best = std::min(best, obj);
      }
    }
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == total - n + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

/// M_1 over all nonnegative densities: min sum m rho, <mu_j, rho> >= 1.
inline double modulus_1(const modlab::MeasureSpace& s, const modlab::MeasureFamily& f) {
  for (const auto& mu : f.members())
    if (mu.is_zero()) return std::numeric_limits<double>::infinity();
  std::vector<double> c(s.size());
  for (std::size_t x = 0; x < s.size(); ++x) c[x] = s.mass(x);
  Matrix G;
  for (const auto& mu : f.members()) G.push_back(mu.dense());
  return vertex_min(c, G, std::vector<double>(f.size(), 1.0));
}

/// Ct_1: max sum eta, sum_j eta_j mu_j(x) <= m(x), written as a min of -sum eta.
inline double content_1(const modlab::MeasureSpace& s, const modlab::MeasureFamily& f) {
  for (const auto& mu : f.members())
    if (mu.is_zero()) return std::numeric_limits<double>::infinity();
  const std::size_t k = f.size();
  std::vector<double> c(k, -1.0);
  Matrix G;
  std::vector<double> h;
  for (std::size_t x = 0; x < s.size(); ++x) {
    std::vector<double> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = -f[j].at(x);
    G.push_back(row);
    h.push_back(-s.mass(x));
  }
  return -vertex_min(c, G, h);
}

/// sup over x and r of m(B(x,2r)) / m(B(x,r)), summing every ball directly.
inline double doubling(const modlab::MeasureSpace& s, const std::vector<double>& radii) {
  double best = 0.0;
  bool any = false;
  for (std::size_t x = 0; x < s.size(); ++x) {
    for (double r : radii) {
      double inner = 0.0, outer = 0.0;
      for (std::size_t y = 0; y < s.size(); ++y) {
        double d2 = 0.0;
        for (std::size_t a = 0; a < s.dim(); ++a) {
          const double t = s.point(x)[a] - s.point(y)[a];
          d2 += t * t;
        }
        const double d = std::sqrt(d2);
        if (d <= r) inner += s.mass(y);
        if (d <= 2.0 * r) outer += s.mass(y);
      }
      if (inner > 0.0) {
        best = any ? std::max(best, outer / inner) : outer / inner;
        any = true;
      }
    }
  }
  return any ? best : 1.0;
}

}  // namespace oracle
