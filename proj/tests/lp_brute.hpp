#pragma once

// Test-only LP oracles: exhaustive vertex enumeration for box-bounded
// problems, plus validity checks for infeasibility certificates and
// unbounded rays. Deliberately naive so it shares no code with the solver.

#include <cmath>
#include <limits>
#include <vector>

#include "empc/pwl.hpp"

namespace lptest {

using empc::LinearProgram;
using empc::RowSense;

struct BruteResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> x;
};

// Gauss-Jordan solve of an n x n system (row-major `a`); false if singular.
inline bool gauss_solve(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    double best = 1e-10;
    for (int r = c; r < n; ++r) {
      double mag = std::fabs(a[r * n + c]);
      if (mag > best) {
        best = mag;
        piv = r;
      }
    }
    if (piv < 0) return false;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(a[c * n + j], a[piv * n + j]);
      std::swap(b[c], b[piv]);
    }
    double d = a[c * n + c];
    for (int j = c; j < n; ++j) a[c * n + j] /= d;
    b[c] /= d;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = a[r * n + c];
      if (f == 0.0) continue;
      for (int j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
      b[r] -= f * b[c];
    }
  }
  return true;
}

inline bool point_feasible(const LinearProgram& lp, const std::vector<double>& x, double tol) {
  for (int j = 0; j < lp.n; ++j) {
    if (x[j] < lp.lo[j] - tol || x[j] > lp.hi[j] + tol) return false;
  }
  for (const auto& row : lp.rows) {
    double act = 0.0;
    for (size_t k = 0; k < row.idx.size(); ++k) act += row.val[k] * x[row.idx[k]];
    double scale = std::max(1.0, std::fabs(row.rhs));
    if (row.sense == RowSense::le) {
      if (act > row.rhs + tol * scale) return false;
    } else if (std::fabs(act - row.rhs) > tol * scale) {
      return false;
    }
  }
  return true;
}

inline double objective_at(const LinearProgram& lp, const std::vector<double>& x) {
  double v = lp.cost_offset;
  for (int j = 0; j < lp.n; ++j) v += lp.cost[j] * x[j];
  return v;
}

// Enumerates every basic point (n constraints chosen tight among rows and
// finite bounds) and returns the best feasible one. Exact for LPs whose
// feasible set is a polytope (all bounds finite), where feasibility implies
// a vertex exists.
inline BruteResult brute_force_lp(const LinearProgram& lp, double tol = 1e-7) {
  const int n = lp.n;
  struct Cand {
    std::vector<double> a;
    double rhs;
  };
  std::vector<Cand> cands;
  for (const auto& row : lp.rows) {
    Cand c;
    c.a.assign(n, 0.0);
    for (size_t k = 0; k < row.idx.size(); ++k) c.a[row.idx[k]] += row.val[k];
    c.rhs = row.rhs;
    cands.push_back(std::move(c));
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lp.lo[j])) {
      Cand c;
      c.a.assign(n, 0.0);
      c.a[j] = 1.0;
      c.rhs = lp.lo[j];
      cands.push_back(std::move(c));
    }
    if (std::isfinite(lp.hi[j]) && lp.hi[j] != lp.lo[j]) {
      Cand c;
      c.a.assign(n, 0.0);
      c.a[j] = 1.0;
      c.rhs = lp.hi[j];
      cands.push_back(std::move(c));
    }
  }

  BruteResult best;
  const int m = static_cast<int>(cands.size());
  if (m < n) return best;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  std::vector<double> a(static_cast<size_t>(n) * n), b(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      const Cand& c = cands[pick[i]];
      for (int j = 0; j < n; ++j) a[i * n + j] = c.a[j];
      b[i] = c.rhs;
    }
    std::vector<double> asys = a, x = b;
    if (gauss_solve(asys, x, n) && point_feasible(lp, x, tol)) {
      double obj = objective_at(lp, x);
      if (!best.feasible || obj < best.objective) {
        best.feasible = true;
        best.objective = obj;
        best.x = x;
      }
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == m - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < n; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

// Valid certificate: lambda >= 0 on <= rows, and the bound-implied minimum
// of lambda'Ax strictly exceeds lambda'b, so no point can satisfy the rows.
inline bool farkas_valid(const LinearProgram& lp, const std::vector<double>& lam,
                         double tol = 1e-7) {
  if (lam.size() != lp.rows.size()) return false;
  double norm = 0.0;
  for (double v : lam) norm = std::max(norm, std::fabs(v));
  if (!(norm > 0.0)) return false;

  std::vector<double> combo(lp.n, 0.0);
  double rhs = 0.0;
  for (size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& row = lp.rows[i];
    if (row.sense == RowSense::le && lam[i] < -tol * norm) return false;
    for (size_t k = 0; k < row.idx.size(); ++k) combo[row.idx[k]] += lam[i] * row.val[k];
    rhs += lam[i] * row.rhs;
  }
  double lo_combo = 0.0;
  for (int j = 0; j < lp.n; ++j) {
    if (combo[j] > 0.0) {
      if (!std::isfinite(lp.lo[j])) return false;
      lo_combo += combo[j] * lp.lo[j];
    } else if (combo[j] < 0.0) {
      if (!std::isfinite(lp.hi[j])) return false;
      lo_combo += combo[j] * lp.hi[j];
    }
  }
  return lo_combo > rhs + tol * std::max(1.0, std::fabs(rhs));
}

// Valid ray: strictly improving, keeps every row satisfied for any step
// length, and never pushes a variable through a finite bound.
inline bool ray_valid(const LinearProgram& lp, const std::vector<double>& ray,
                      double tol = 1e-7) {
  if (static_cast<int>(ray.size()) != lp.n) return false;
  double norm = 0.0;
  for (double v : ray) norm = std::max(norm, std::fabs(v));
  if (!(norm > 0.0)) return false;

  double dcost = 0.0;
  for (int j = 0; j < lp.n; ++j) dcost += lp.cost[j] * ray[j];
  if (!(dcost < -tol * norm)) return false;

  for (int j = 0; j < lp.n; ++j) {
    if (ray[j] > tol * norm && std::isfinite(lp.hi[j])) return false;
    if (ray[j] < -tol * norm && std::isfinite(lp.lo[j])) return false;
  }
  for (const auto& row : lp.rows) {
    if (row.sense == RowSense::le && row.rhs == std::numeric_limits<double>::infinity()) {
      continue;  // vacuous row, any drift is fine
    }
    double drift = 0.0;
    for (size_t k = 0; k < row.idx.size(); ++k) drift += row.val[k] * ray[row.idx[k]];
    if (row.sense == RowSense::le) {
      if (drift > tol * norm) return false;
    } else if (std::fabs(drift) > tol * norm) {
      return false;
    }
  }
  return true;
}

}  // namespace lptest
