#pragma once

// Self-contained LP solver: bounded-variable primal simplex on a dense
// tableau. Pipeline: merge/validate rows, presolve (empty and
// bound-redundant rows), power-of-two equilibration, a triangular crash
// on equality rows, composite phase 1 (sum of infeasibilities), Dantzig
// phase 2 with a Bland's-rule fallback against cycling, then a
// post-solve verification of the reported point against the original,
// unscaled problem. A solve that fails verification is retried once
// under Bland's rule from scratch and never reported optimal unless the
// recheck passes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "empc/errors.hpp"
#include "empc/pwl.hpp"

namespace empc {

enum class LpStatus {
  optimal,
  infeasible,
  unbounded,
  iteration_limit,
  numerical_failure,
};

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
    case LpStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

struct LpTolerances {
  double feas = 1e-7;  // max scaled constraint/bound violation of a reported optimum
  double obj = 1e-7;   // reported objective vs recomputation from primal values
};

struct LpOptions {
  long max_iterations = 0;  // 0 = automatic from problem size
  bool force_bland = false;
  int scaling_rounds = 2;
};

struct LpSolution {
  LpStatus status = LpStatus::numerical_failure;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;       // primal values, valid when status == optimal
  long iterations = 0;
  long iterations_phase1 = 0;  // share of `iterations` spent reaching feasibility
  long basis_changes = 0;      // iterations that eliminated (rest were bound flips)
  double max_residual = 0.0;   // scaled violation of the reported point
  std::string detail;
  std::vector<double> farkas;  // per-row multipliers backing an infeasible status
  std::vector<double> ray;     // improving direction backing an unbounded status
};

namespace detail {

enum class VStat : std::uint8_t { basic, at_lo, at_hi, nb_free };

class SimplexSolver {
 public:
  SimplexSolver(const LinearProgram& lp, LpTolerances tol, LpOptions opt)
      : lp_(lp), tol_(tol), opt_(opt) {}

  LpSolution run() {
    validate();
    ingest();
    presolve();
    if (presolve_infeasible_) {
      LpSolution s;
      s.status = LpStatus::infeasible;
      s.detail = presolve_note_;
      s.farkas = farkas_;
      return s;
    }

    LpSolution sol = attempt(opt_.force_bland);
    if (sol.status == LpStatus::optimal || sol.status == LpStatus::infeasible ||
        sol.status == LpStatus::unbounded || opt_.force_bland) {
      return sol;
    }
    // Numerical trouble or a suspected cycle: one deterministic retry
    // under Bland's rule end to end.
    LpSolution retry = attempt(true);
    retry.iterations += sol.iterations;
    if (retry.status != LpStatus::optimal && sol.status == LpStatus::iteration_limit) {
      retry.status = LpStatus::iteration_limit;
    }
    return retry;
  }

 private:
  // ---- problem ingestion -------------------------------------------------

  void validate() const {
    const LinearProgram& lp = lp_;
    if (lp.n < 0 || static_cast<int>(lp.lo.size()) != lp.n ||
        static_cast<int>(lp.hi.size()) != lp.n || static_cast<int>(lp.cost.size()) != lp.n) {
      throw ConfigError("solve_lp: inconsistent variable arrays");
    }
    for (int j = 0; j < lp.n; ++j) {
      if (std::isnan(lp.lo[j]) || std::isnan(lp.hi[j]) || !(lp.lo[j] <= lp.hi[j])) {
        throw ConfigError("solve_lp: variable with empty bound interval");
      }
    }
    for (const auto& r : lp.rows) {
      if (r.idx.size() != r.val.size()) throw ConfigError("solve_lp: malformed row");
      for (int j : r.idx) {
        if (j < 0 || j >= lp.n) throw ConfigError("solve_lp: row references unknown variable");
      }
      if (std::isnan(r.rhs)) throw ConfigError("solve_lp: NaN rhs");
    }
  }

  // Merge duplicate indices into dense-free sparse rows (original units).
  void ingest() {
    n_ = lp_.n;
    m_all_ = static_cast<int>(lp_.rows.size());
    rows_.resize(m_all_);
    scratch_.assign(n_, 0.0);
    for (int i = 0; i < m_all_; ++i) {
      const auto& src = lp_.rows[i];
      auto& dst = rows_[i];
      for (size_t k = 0; k < src.idx.size(); ++k) scratch_[src.idx[k]] += src.val[k];
      for (size_t k = 0; k < src.idx.size(); ++k) {
        int j = src.idx[k];
        if (scratch_[j] != 0.0) {
          dst.emplace_back(j, scratch_[j]);
          scratch_[j] = 0.0;
        }
      }
      std::sort(dst.begin(), dst.end());
    }
  }

  // Drops rows that can never bind given the variable boxes and detects
  // trivially conflicting rows. Produces a one-row certificate when a
  // row is infeasible against the bounds alone.
  void presolve() {
    dropped_.assign(m_all_, 0);
    farkas_.assign(m_all_, 0.0);
    for (int i = 0; i < m_all_; ++i) {
      double min_act = 0.0, max_act = 0.0;
      for (auto [j, a] : rows_[i]) {
        double lo = lp_.lo[j], hi = lp_.hi[j];
        double p = a > 0.0 ? lo : hi;  // contribution minimizer
        double q = a > 0.0 ? hi : lo;
        min_act += std::isinf(p) ? -kInf : a * p;
        max_act += std::isinf(q) ? kInf : a * q;
      }
      double b = lp_.rows[i].rhs;
      double slack_tol = tol_.feas * std::max(1.0, std::abs(b));
      if (lp_.rows[i].sense == RowSense::le) {
        if (min_act > b + slack_tol) {
          presolve_infeasible_ = true;
          presolve_note_ = "row " + std::to_string(i) + " exceeds rhs for every point in bounds";
          farkas_[i] = 1.0;
          return;
        }
        if (max_act <= b - slack_tol || rows_[i].empty()) dropped_[i] = 1;
      } else {
        if (min_act > b + slack_tol || max_act < b - slack_tol) {
          presolve_infeasible_ = true;
          presolve_note_ = "equality row " + std::to_string(i) + " unreachable within bounds";
          farkas_[i] = min_act > b ? 1.0 : -1.0;
          return;
        }
        if (rows_[i].empty()) dropped_[i] = 1;
      }
    }
    keep_.clear();
    for (int i = 0; i < m_all_; ++i) {
      if (!dropped_[i]) keep_.push_back(i);
    }
    m_ = static_cast<int>(keep_.size());
  }

  // ---- one full solve attempt ---------------------------------------------

  LpSolution attempt(bool bland_always) {
    build_scaled();
    build_tableau();
    crash_equalities();
    recompute_beta();

    LpSolution sol;
    bland_ = bland_always;
    bland_locked_ = bland_always;
    degen_streak_ = 0;
    iters_ = 0;
    basis_changes_ = 0;
    long cap = opt_.max_iterations > 0 ? opt_.max_iterations
                                       : 1000 + 30L * (static_cast<long>(n_) + m_);

    int phase1 = run_phase1(cap);
    sol.iterations = iters_;
    sol.iterations_phase1 = iters_;
    if (phase1 == kIterLimit) {
      sol.status = LpStatus::iteration_limit;
      sol.detail = "iteration limit in phase 1";
      return sol;
    }
    if (phase1 == kNumerical) {
      sol.status = LpStatus::numerical_failure;
      sol.detail = "phase 1 lost every blocking bound (numerical breakdown)";
      return sol;
    }
    if (phase1 == kInfeasible) {
      sol.status = LpStatus::infeasible;
      sol.detail = "phase 1 finished with residual infeasibility " + std::to_string(best_w_);
      sol.farkas = farkas_;
      return sol;
    }

    int phase2 = run_phase2(cap);
    sol.iterations = iters_;
    if (phase2 == kIterLimit) {
      sol.status = LpStatus::iteration_limit;
      sol.detail = "iteration limit in phase 2";
      return sol;
    }
    if (phase2 == kUnbounded) {
      sol.status = LpStatus::unbounded;
      sol.detail = "improving direction without blocking bound";
      sol.ray = extract_ray();
      return sol;
    }

    extract(sol);
    verify(sol);
    return sol;
  }

  void build_scaled() {
    row_scale_.assign(m_, 1.0);
    col_scale_.assign(n_, 1.0);
    auto pow2 = [](double v) {
      if (v <= 0.0 || std::isinf(v)) return 1.0;
      int e = 0;
      std::frexp(v, &e);
      return std::ldexp(1.0, 1 - e);  // ~1/v rounded to a power of two
    };
    for (int round = 0; round < opt_.scaling_rounds; ++round) {
      for (int i = 0; i < m_; ++i) {
        double mx = 0.0;
        for (auto [j, a] : rows_[keep_[i]]) {
          mx = std::max(mx, std::abs(a) * row_scale_[i] * col_scale_[j]);
        }
        if (mx > 0.0) row_scale_[i] *= pow2(mx);
      }
      std::vector<double> colmax(n_, 0.0);
      for (int i = 0; i < m_; ++i) {
        for (auto [j, a] : rows_[keep_[i]]) {
          colmax[j] = std::max(colmax[j], std::abs(a) * row_scale_[i] * col_scale_[j]);
        }
      }
      for (int j = 0; j < n_; ++j) {
        if (colmax[j] > 0.0) col_scale_[j] *= pow2(colmax[j]);
      }
    }
  }

  void build_tableau() {
    N_ = n_ + m_;
    W_ = N_ + 1;  // last column carries B^-1 * rhs
    T_.assign(static_cast<size_t>(m_) * W_, 0.0);
    lo_.resize(N_);
    hi_.resize(N_);
    cost_.assign(N_, 0.0);
    stat_.assign(N_, VStat::at_lo);
    basic_.assign(m_, -1);
    row_of_.assign(N_, -1);
    beta_.assign(m_, 0.0);
    zrow_.assign(N_, 0.0);

    for (int j = 0; j < n_; ++j) {
      double c = col_scale_[j];
      lo_[j] = std::isinf(lp_.lo[j]) ? -kInf : lp_.lo[j] / c;
      hi_[j] = std::isinf(lp_.hi[j]) ? kInf : lp_.hi[j] / c;
      cost_[j] = lp_.cost[j] * c;
      if (std::isfinite(lo_[j])) {
        stat_[j] = VStat::at_lo;
      } else if (std::isfinite(hi_[j])) {
        stat_[j] = VStat::at_hi;
      } else {
        stat_[j] = VStat::nb_free;
      }
    }
    for (int i = 0; i < m_; ++i) {
      int src = keep_[i];
      double* row = &T_[static_cast<size_t>(i) * W_];
      for (auto [j, a] : rows_[src]) row[j] = a * row_scale_[i] * col_scale_[j];
      int s = n_ + i;
      row[s] = 1.0;
      row[N_] = lp_.rows[src].rhs * row_scale_[i];
      lo_[s] = 0.0;
      hi_[s] = lp_.rows[src].sense == RowSense::eq ? 0.0 : kInf;
      basic_[i] = s;
      stat_[s] = VStat::basic;
      row_of_[s] = i;
    }
  }

  double nb_value(int j) const {
    switch (stat_[j]) {
      case VStat::at_lo: return lo_[j];
      case VStat::at_hi: return hi_[j];
      default: return 0.0;
    }
  }

  // Pivot equality-row slacks out of the basis along near-triangular
  // structural columns (SOC-recursion chains pivot in O(nnz) here),
  // leaving phase 1 to repair only genuinely conflicting rows.
  void crash_equalities() {
    for (int i = 0; i < m_; ++i) {
      if (hi_[n_ + i] != 0.0 || basic_[i] != n_ + i) continue;  // only equality slacks
      const double* row = &T_[static_cast<size_t>(i) * W_];
      double mx = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (stat_[j] != VStat::basic) mx = std::max(mx, std::abs(row[j]));
      }
      if (mx <= 0.0) continue;
      int best = -1;
      long best_nnz = 0;
      double best_piv = 0.0;
      for (int j = 0; j < n_; ++j) {
        double a = std::abs(row[j]);
        if (stat_[j] == VStat::basic || a < 0.01 * mx || lo_[j] == hi_[j]) continue;
        long nnz = 0;
        for (int r = 0; r < m_; ++r) {
          if (T_[static_cast<size_t>(r) * W_ + j] != 0.0) ++nnz;
        }
        if (best < 0 || nnz < best_nnz || (nnz == best_nnz && a > best_piv)) {
          best = j;
          best_nnz = nnz;
          best_piv = a;
        }
      }
      if (best < 0) continue;
      eliminate(i, best);
      int leave = basic_[i];
      stat_[leave] = VStat::at_lo;  // equality slack, lo == hi == 0
      row_of_[leave] = -1;
      basic_[i] = best;
      stat_[best] = VStat::basic;
      row_of_[best] = i;
    }
  }

  // beta = B^-1 rhs - sum over nonbasic columns with nonzero value.
  void recompute_beta() {
    for (int i = 0; i < m_; ++i) beta_[i] = T_[static_cast<size_t>(i) * W_ + N_];
    for (int j = 0; j < N_; ++j) {
      if (stat_[j] == VStat::basic) continue;
      double v = nb_value(j);
      if (v == 0.0) continue;
      for (int i = 0; i < m_; ++i) {
        double a = T_[static_cast<size_t>(i) * W_ + j];
        if (a != 0.0) beta_[i] -= a * v;
      }
    }
  }

  // Gaussian elimination of column e against pivot row r (tableau,
  // rhs column included). Rows without the entering column are skipped.
  void eliminate(int r, int e) {
    double* pr = &T_[static_cast<size_t>(r) * W_];
    double piv = pr[e];
    double inv = 1.0 / piv;
    nzcols_.clear();
    for (int k = 0; k < W_; ++k) {
      if (pr[k] == 0.0) continue;
      pr[k] *= inv;
      nzcols_.push_back(k);
    }
    pr[e] = 1.0;
    // Indexed updates win while the pivot row is sparse; dense axpy wins once
    // fill-in sets in (the gather loop cannot vectorize).
    bool sparse = nzcols_.size() * 4 < static_cast<size_t>(W_);
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* __restrict__ ri = &T_[static_cast<size_t>(i) * W_];
      double f = ri[e];
      if (f == 0.0) continue;
      if (sparse) {
        for (int k : nzcols_) ri[k] -= f * pr[k];
      } else {
        const double* __restrict__ pp = pr;
        for (int k = 0; k < W_; ++k) ri[k] -= f * pp[k];
      }
      ri[e] = 0.0;
    }
  }

  static constexpr int kOk = 0;
  static constexpr int kInfeasible = 1;
  static constexpr int kUnbounded = 2;
  static constexpr int kIterLimit = 3;
  static constexpr int kNumerical = 4;

  double infeas_of(int i) const {
    int b = basic_[i];
    if (beta_[i] < lo_[b]) return lo_[b] - beta_[i];
    if (beta_[i] > hi_[b]) return beta_[i] - hi_[b];
    return 0.0;
  }

  // Composite phase 1: minimizes the total bound violation of the basic
  // variables. Infeasible basics block when they reach their violated
  // bound; feasible basics block at either bound as usual.
  int run_phase1(long cap) {
    devex_.clear();  // devex weights only steer phase 2
    double rhs_mag = 1.0;
    for (int i = 0; i < m_; ++i) {
      rhs_mag = std::max(rhs_mag, std::abs(T_[static_cast<size_t>(i) * W_ + N_]));
    }
    feas_eps_ = 1e-9 * rhs_mag;

    while (true) {
      infeas_rows_.clear();
      double w = 0.0;
      for (int i = 0; i < m_; ++i) {
        double v = infeas_of(i);
        if (v > feas_eps_) {
          infeas_rows_.push_back(i);
          w += v;
        }
      }
      best_w_ = w;
      if (infeas_rows_.empty()) return kOk;
      if (iters_ >= cap) return kIterLimit;

      // Gradient of the infeasibility sum w.r.t. each nonbasic column.
      std::fill(zrow_.begin(), zrow_.end(), 0.0);
      for (int i : infeas_rows_) {
        const double* row = &T_[static_cast<size_t>(i) * W_];
        int b = basic_[i];
        double sgn = beta_[i] < lo_[b] ? 1.0 : -1.0;  // d w / d x_j = sgn * T[i][j]
        for (int j = 0; j < N_; ++j) zrow_[j] += sgn * row[j];
      }

      int e = -1, dir = 0;
      pick_entering(zrow_, e, dir);
      if (e < 0) {
        // No improving direction: w is minimal and positive.
        build_farkas();
        return kInfeasible;
      }
      int rc = bland_ ? ratio_and_pivot(e, dir, /*phase1=*/true) : ratio_phase1_long(e, dir);
      if (rc == kUnbounded) {
        // Cannot happen in exact arithmetic (the violated rows block);
        // report a numerical dead end so the caller retries under Bland.
        return kNumerical;
      }
    }
  }

  int run_phase2(long cap) {
    compute_zrow();
    recompute_beta();
    devex_.assign(N_, 1.0);
    while (true) {
      if (iters_ >= cap) return kIterLimit;
      int e = -1, dir = 0;
      pick_entering(zrow_, e, dir);
      if (e < 0) return kOk;
      int rc = ratio_and_pivot(e, dir, /*phase1=*/false);
      if (rc == kUnbounded) {
        unbounded_e_ = e;
        unbounded_dir_ = dir;
        return kUnbounded;
      }
    }
  }

  void compute_zrow() {
    for (int j = 0; j < N_; ++j) zrow_[j] = cost_[j];
    for (int i = 0; i < m_; ++i) {
      double cb = cost_[basic_[i]];
      if (cb == 0.0) continue;
      const double* row = &T_[static_cast<size_t>(i) * W_];
      for (int j = 0; j < N_; ++j) zrow_[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) zrow_[basic_[i]] = 0.0;
  }

  // Chooses the entering variable against a reduced-cost row: devex-weighted
  // largest violation when weights exist, plain Dantzig otherwise, lowest
  // index under Bland's rule.
  void pick_entering(const std::vector<double>& d, int& e, int& dir) const {
    const double eps = 1e-9;
    const bool weighted = !bland_ && !devex_.empty();
    double best = weighted ? 0.0 : eps;
    e = -1;
    dir = 0;
    for (int j = 0; j < N_; ++j) {
      if (stat_[j] == VStat::basic || lo_[j] == hi_[j]) continue;
      double dj = d[j];
      int cand_dir = 0;
      if (stat_[j] == VStat::at_lo) {
        if (dj < -eps) cand_dir = 1;
      } else if (stat_[j] == VStat::at_hi) {
        if (dj > eps) cand_dir = -1;
      } else {  // free
        if (dj < -eps) {
          cand_dir = 1;
        } else if (dj > eps) {
          cand_dir = -1;
        }
      }
      if (cand_dir == 0) continue;
      if (bland_) {
        e = j;
        dir = cand_dir;
        return;
      }
      double score = weighted ? dj * dj / devex_[j] : std::abs(dj);
      if (score > best) {
        best = score;
        e = j;
        dir = cand_dir;
      }
    }
  }

  // Bounded-variable ratio test and basis change (or bound flip). In
  // phase 1 a basic variable beyond one of its bounds blocks when it
  // reaches that violated bound (short-step rule); feasible basics block
  // at whichever bound they approach.
  int ratio_and_pivot(int e, int dir, bool phase1) {
    const double piv_eps = 1e-9;
    const double* colbase = T_.data();
    double theta = kInf;
    // Entering variable's own opposite bound.
    if (stat_[e] != VStat::nb_free && std::isfinite(lo_[e]) && std::isfinite(hi_[e])) {
      theta = hi_[e] - lo_[e];
    }
    int block = -1;  // row index, or -1 when the entering variable flips
    VStat block_side = VStat::at_lo;
    for (int i = 0; i < m_; ++i) {
      double a = colbase[static_cast<size_t>(i) * W_ + e];
      if (a == 0.0) continue;
      double rate = -dir * a;  // d beta_i / d theta
      if (std::abs(rate) <= piv_eps) continue;
      int b = basic_[i];
      double t = kInf;
      VStat side = VStat::at_lo;
      if (phase1 && beta_[i] < lo_[b] - feas_eps_) {
        if (rate > 0.0) {
          t = (lo_[b] - beta_[i]) / rate;
          side = VStat::at_lo;
        }
      } else if (phase1 && beta_[i] > hi_[b] + feas_eps_) {
        if (rate < 0.0) {
          t = (hi_[b] - beta_[i]) / rate;
          side = VStat::at_hi;
        }
      } else if (rate > 0.0) {
        if (std::isfinite(hi_[b])) {
          t = std::max(0.0, (hi_[b] - beta_[i]) / rate);
          side = VStat::at_hi;
        }
      } else {
        if (std::isfinite(lo_[b])) {
          t = std::max(0.0, (lo_[b] - beta_[i]) / rate);
          side = VStat::at_lo;
        }
      }
      if (t < theta - 1e-12) {
        theta = t;
        block = i;
        block_side = side;
      } else if (block >= 0 && t <= theta + 1e-12 + 1e-9 * theta) {
        // Tie break: largest pivot magnitude for stability, lowest basic
        // index under Bland's rule.
        double cur = std::abs(colbase[static_cast<size_t>(block) * W_ + e]);
        if (bland_ ? basic_[i] < basic_[block] : std::abs(a) > cur) {
          theta = std::min(theta, t);
          block = i;
          block_side = side;
        }
      }
    }

    if (std::isinf(theta)) return kUnbounded;

    note_step(theta);
    if (block < 0) {
      apply_flip(e, dir, theta);
    } else {
      apply_pivot(e, dir, theta, block, block_side, phase1);
    }
    return kOk;
  }

  void note_step(double theta) {
    ++iters_;
    if (theta <= 1e-11) {
      if (++degen_streak_ > 40 + m_ / 4 && !bland_locked_) bland_ = true;
    } else {
      degen_streak_ = 0;
      if (!bland_locked_) bland_ = false;
    }
  }

  // Bound flip: no basis change.
  void apply_flip(int e, int dir, double theta) {
    (void)0;
    double delta = dir * theta;
    for (int i = 0; i < m_; ++i) {
      double a = T_[static_cast<size_t>(i) * W_ + e];
      if (a != 0.0) beta_[i] -= a * delta;
    }
    stat_[e] = stat_[e] == VStat::at_lo ? VStat::at_hi : VStat::at_lo;
  }

  void apply_pivot(int e, int dir, double theta, int block, VStat block_side, bool phase1) {
    double delta = dir * theta;
    double enter_value = nb_value(e) + delta;
    for (int i = 0; i < m_; ++i) {
      if (i == block) continue;
      double a = T_[static_cast<size_t>(i) * W_ + e];
      if (a != 0.0) beta_[i] -= a * delta;
    }
    int leave = basic_[block];
    stat_[leave] = block_side;
    if (lo_[leave] == hi_[leave]) stat_[leave] = VStat::at_lo;
    row_of_[leave] = -1;

    ++basis_changes_;
    double piv = T_[static_cast<size_t>(block) * W_ + e];
    eliminate(block, e);
    // Reduced-cost row update (phase 2 maintains it; phase 1 rebuilds).
    if (!phase1) {
      const double* pr = &T_[static_cast<size_t>(block) * W_];
      double f = zrow_[e];
      if (f != 0.0) {
        for (int j = 0; j < N_; ++j) zrow_[j] -= f * pr[j];
      }
      zrow_[e] = 0.0;
      if (!devex_.empty()) {
        // Devex reference weights: the normalized pivot row already holds
        // alpha_j / alpha_q, so the update is one sweep.
        double we = devex_[e];
        double mx = 0.0;
        for (int j = 0; j < N_; ++j) {
          double t = pr[j];
          if (t != 0.0) {
            double cand = t * t * we;
            if (cand > devex_[j]) devex_[j] = cand;
            if (devex_[j] > mx) mx = devex_[j];
          }
        }
        devex_[leave] = std::max(we / (piv * piv), 1.0);
        devex_[e] = 1.0;
        if (mx > 1e12) devex_.assign(N_, 1.0);
      }
    }
    basic_[block] = e;
    stat_[e] = VStat::basic;
    row_of_[e] = block;
    beta_[block] = enter_value;
  }

  // Phase-1 long-step ratio test. The infeasibility sum is piecewise
  // linear in the step length, so instead of stopping at the first bound
  // crossing we walk its breakpoints while the slope stays negative; one
  // pivot can repair many violated rows at once. The short-step test
  // remains in use under Bland's rule, whose anti-cycling argument needs it.
  int ratio_phase1_long(int e, int dir) {
    const double piv_eps = 1e-9;
    double flip_theta = kInf;
    if (stat_[e] != VStat::nb_free && std::isfinite(lo_[e]) && std::isfinite(hi_[e])) {
      flip_theta = hi_[e] - lo_[e];
    }
    bps_.clear();
    double slope = dir * zrow_[e];
    const double* colbase = T_.data();
    for (int i = 0; i < m_; ++i) {
      double a = colbase[static_cast<size_t>(i) * W_ + e];
      if (a == 0.0) continue;
      double rate = -dir * a;  // d beta_i / d theta
      if (std::abs(rate) <= piv_eps) continue;
      int b = basic_[i];
      double lob = lo_[b], hib = hi_[b];
      double amag = std::abs(a);
      if (beta_[i] < lob - feas_eps_) {
        if (rate > 0.0) {
          // Heals at lo; overshooting a finite hi would hurt again.
          bps_.push_back({std::max(0.0, (lob - beta_[i]) / rate), rate, i, VStat::at_lo, amag});
          if (std::isfinite(hib)) {
            bps_.push_back({std::max(0.0, (hib - beta_[i]) / rate), rate, i, VStat::at_hi, amag});
          }
        }
      } else if (beta_[i] > hib + feas_eps_) {
        if (rate < 0.0) {
          bps_.push_back({std::max(0.0, (hib - beta_[i]) / rate), -rate, i, VStat::at_hi, amag});
          if (std::isfinite(lob)) {
            bps_.push_back({std::max(0.0, (lob - beta_[i]) / rate), -rate, i, VStat::at_lo, amag});
          }
        }
      } else if (rate > 0.0) {
        if (std::isfinite(hib)) {
          bps_.push_back({std::max(0.0, (hib - beta_[i]) / rate), rate, i, VStat::at_hi, amag});
        }
      } else if (std::isfinite(lob)) {
        bps_.push_back({std::max(0.0, (lob - beta_[i]) / rate), -rate, i, VStat::at_lo, amag});
      }
    }
    std::sort(bps_.begin(), bps_.end(),
              [](const Bp& x, const Bp& y) { return x.theta < y.theta; });

    int stop = -1;
    for (size_t k = 0; k < bps_.size(); ++k) {
      if (bps_[k].theta >= flip_theta) break;
      slope += bps_[k].dslope;
      if (slope >= -1e-12) {
        stop = static_cast<int>(k);
        break;
      }
    }
    if (stop < 0) {
      if (std::isinf(flip_theta)) return kUnbounded;
      note_step(flip_theta);
      apply_flip(e, dir, flip_theta);
      return kOk;
    }
    // Among breakpoints at (numerically) the same step length, pivot on
    // the one with the largest tableau entry for stability.
    int pick = stop;
    double th = bps_[static_cast<size_t>(stop)].theta;
    double win = 1e-12 + 1e-9 * th;
    for (size_t k = 0; k < bps_.size(); ++k) {
      if (bps_[k].theta > th + win) break;
      if (std::abs(bps_[k].theta - th) <= win &&
          bps_[k].amag > bps_[static_cast<size_t>(pick)].amag) {
        pick = static_cast<int>(k);
      }
    }
    note_step(th);
    apply_pivot(e, dir, th, bps_[static_cast<size_t>(pick)].row,
                bps_[static_cast<size_t>(pick)].side, /*phase1=*/true);
    return kOk;
  }

  // Farkas-style multipliers for the original rows from the phase-1
  // optimum: lambda' B^-1 read off the slack columns.
  void build_farkas() {
    farkas_.assign(m_all_, 0.0);
    for (int i : infeas_rows_) {
      int b = basic_[i];
      // Same orientation as the phase-1 gradient: +1 for a basic value below
      // its lower bound, -1 for one above its upper bound. The slack-column
      // readoff of that combination is a row multiplier vector whose
      // bound-implied minimum exceeds the combined rhs by exactly the
      // residual infeasibility.
      double sgn = beta_[i] < lo_[b] ? 1.0 : -1.0;
      const double* row = &T_[static_cast<size_t>(i) * W_];
      for (int k = 0; k < m_; ++k) {
        double v = row[n_ + k];
        if (v != 0.0) farkas_[keep_[k]] += sgn * v * row_scale_[k];
      }
    }
  }

  std::vector<double> extract_ray() const {
    std::vector<double> ray(n_, 0.0);
    int e = unbounded_e_;
    if (e < n_) ray[e] = unbounded_dir_ * col_scale_[e];
    for (int i = 0; i < m_; ++i) {
      int b = basic_[i];
      if (b >= n_) continue;
      double a = T_[static_cast<size_t>(i) * W_ + e];
      if (a != 0.0) ray[b] = -unbounded_dir_ * a * col_scale_[b];
    }
    return ray;
  }

  void extract(LpSolution& sol) {
    recompute_beta();
    sol.x.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      double v = stat_[j] == VStat::basic ? beta_[row_of_[j]] : nb_value(j);
      sol.x[j] = v * col_scale_[j];
    }
    double obj = lp_.cost_offset;
    for (int j = 0; j < n_; ++j) obj += lp_.cost[j] * sol.x[j];
    sol.objective = obj;
    sol.iterations = iters_;
    sol.basis_changes = basis_changes_;
  }

  // Checks the reported point against the original problem. Anything
  // outside tolerance downgrades the status so a bad point is never
  // reported optimal.
  void verify(LpSolution& sol) const {
    double worst = 0.0;
    for (int j = 0; j < n_; ++j) {
      double denom = std::max(1.0, std::max(std::abs(lp_.lo[j]), std::abs(lp_.hi[j])));
      if (std::isfinite(lp_.lo[j])) worst = std::max(worst, (lp_.lo[j] - sol.x[j]) / denom);
      if (std::isfinite(lp_.hi[j])) worst = std::max(worst, (sol.x[j] - lp_.hi[j]) / denom);
    }
    for (int i = 0; i < m_all_; ++i) {
      double ax = 0.0;
      for (auto [j, a] : rows_[i]) ax += a * sol.x[j];
      double b = lp_.rows[i].rhs;
      double denom = std::max(1.0, std::abs(b));
      double v = lp_.rows[i].sense == RowSense::eq ? std::abs(ax - b) : ax - b;
      worst = std::max(worst, v / denom);
    }
    sol.max_residual = std::max(worst, 0.0);
    if (sol.max_residual <= tol_.feas) {
      sol.status = LpStatus::optimal;
    } else {
      sol.status = LpStatus::numerical_failure;
      sol.detail = "reported point violates constraints by " + std::to_string(sol.max_residual);
    }
  }

  // ---- members -------------------------------------------------------------

  const LinearProgram& lp_;
  LpTolerances tol_;
  LpOptions opt_;

  int n_ = 0, m_all_ = 0, m_ = 0, N_ = 0, W_ = 0;
  std::vector<std::vector<std::pair<int, double>>> rows_;  // merged, original units
  std::vector<char> dropped_;
  std::vector<int> keep_;
  bool presolve_infeasible_ = false;
  std::string presolve_note_;

  struct Bp {  // phase-1 ratio-test breakpoint
    double theta;
    double dslope;
    int row;
    VStat side;
    double amag;
  };

  std::vector<double> row_scale_, col_scale_;
  std::vector<double> devex_;
  std::vector<Bp> bps_;
  std::vector<int> nzcols_;
  std::vector<double> T_;  // m x (n + m + 1), rhs in the last column
  std::vector<double> lo_, hi_, cost_, beta_, zrow_, scratch_;
  std::vector<VStat> stat_;
  std::vector<int> basic_, row_of_;
  std::vector<int> infeas_rows_;
  std::vector<double> farkas_;

  bool bland_ = false, bland_locked_ = false;
  int degen_streak_ = 0;
  long iters_ = 0, basis_changes_ = 0;
  double best_w_ = 0.0, feas_eps_ = 1e-9;
  int unbounded_e_ = -1, unbounded_dir_ = 0;
};

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp, LpTolerances tol = {}, LpOptions opt = {}) {
  detail::SimplexSolver solver(lp, tol, opt);
  return solver.run();
}

}  // namespace empc
