#pragma once

// Piecewise-linear convex cost models and their exact lowering to pure
// linear programs. A PwlModel carries bounded variables, linear (in)equality
// constraints, and an objective built from a linear part plus nonnegative
// multiples of |affine| and max(affine, ...) terms. lower() rewrites the
// |.| and max terms with epigraph variables, which is exact for
// nonnegative multipliers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "empc/errors.hpp"

namespace empc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

// Sparse affine expression: sum of coef*var plus a constant.
struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}

  LinExpr& add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  LinExpr& add(double c) {
    constant += c;
    return *this;
  }

  double eval(std::span<const double> x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x[static_cast<size_t>(t.var)];
    return v;
  }
};

enum class RowSense { le, eq };

// Plain LP: min cost'x + offset subject to sparse rows (<= or ==) and
// variable bounds (+-inf allowed).
struct LinearProgram {
  struct Row {
    std::vector<int> idx;
    std::vector<double> val;
    RowSense sense = RowSense::le;
    double rhs = 0.0;
  };

  int n = 0;
  std::vector<double> lo, hi;    // size n
  std::vector<double> cost;      // size n
  double cost_offset = 0.0;
  std::vector<Row> rows;

  int add_var(double lb, double ub) {
    lo.push_back(lb);
    hi.push_back(ub);
    cost.push_back(0.0);
    return n++;
  }

  void add_row(const LinExpr& e, RowSense sense, double rhs) {
    Row r;
    r.sense = sense;
    r.rhs = rhs - e.constant;
    r.idx.reserve(e.terms.size());
    r.val.reserve(e.terms.size());
    for (const auto& t : e.terms) {
      r.idx.push_back(t.var);
      r.val.push_back(t.coef);
    }
    rows.push_back(std::move(r));
  }

  // Text dump, one constraint per line: objective, rows, bounds.
  void debug_dump(std::ostream& os) const {
    auto num = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", v);
      return std::string(buf);
    };
    os << "min:";
    for (int j = 0; j < n; ++j) {
      if (cost[static_cast<size_t>(j)] != 0.0) {
        os << " " << num(cost[static_cast<size_t>(j)]) << "*x" << j;
      }
    }
    if (cost_offset != 0.0) os << " + " << num(cost_offset);
    os << "\n";
    for (size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i];
      os << "r" << i << ":";
      for (size_t k = 0; k < r.idx.size(); ++k) {
        os << " " << num(r.val[k]) << "*x" << r.idx[k];
      }
      os << (r.sense == RowSense::eq ? " == " : " <= ") << num(r.rhs) << "\n";
    }
    for (int j = 0; j < n; ++j) {
      os << num(lo[static_cast<size_t>(j)]) << " <= x" << j << " <= "
         << num(hi[static_cast<size_t>(j)]) << "\n";
    }
  }
};

// Convex piecewise-linear minimization model.
struct PwlModel {
  struct Constraint {
    LinExpr expr;
    RowSense sense = RowSense::le;
    double rhs = 0.0;
  };
  struct AbsTerm {
    double coef = 0.0;
    LinExpr expr;
  };
  struct MaxTerm {
    double coef = 0.0;
    std::vector<LinExpr> exprs;
  };

  std::vector<double> lo, hi;
  std::vector<Constraint> constraints;
  LinExpr linear_cost;
  std::vector<AbsTerm> abs_terms;
  std::vector<MaxTerm> max_terms;

  int n_vars() const { return static_cast<int>(lo.size()); }

  int add_var(double lb, double ub) {
    if (!(lb <= ub)) throw ConfigError("PwlModel: variable with lo > hi");
    lo.push_back(lb);
    hi.push_back(ub);
    return n_vars() - 1;
  }

  void add_le(LinExpr e, double rhs) { constraints.push_back({std::move(e), RowSense::le, rhs}); }
  void add_eq(LinExpr e, double rhs) { constraints.push_back({std::move(e), RowSense::eq, rhs}); }

  void add_linear_cost(const LinExpr& e) {
    for (const auto& t : e.terms) linear_cost.add(t.var, t.coef);
    linear_cost.constant += e.constant;
  }

  // coef * |expr|, coef >= 0.
  void add_abs_cost(double coef, LinExpr expr) {
    if (!(coef >= 0.0)) throw ConfigError("PwlModel: |.| cost coefficient must be >= 0");
    abs_terms.push_back({coef, std::move(expr)});
  }

  // coef * max(exprs...), coef >= 0, nonempty list.
  void add_max_cost(double coef, std::vector<LinExpr> exprs) {
    if (!(coef >= 0.0)) throw ConfigError("PwlModel: max cost coefficient must be >= 0");
    if (exprs.empty()) throw ConfigError("PwlModel: max cost needs a nonempty list");
    max_terms.push_back({coef, std::move(exprs)});
  }

  // True objective value (with real |.| and max) at a point given by the
  // model variables only.
  double objective_value(std::span<const double> x) const {
    double v = linear_cost.eval(x);
    for (const auto& a : abs_terms) v += a.coef * std::abs(a.expr.eval(x));
    for (const auto& m : max_terms) {
      double best = -kInf;
      for (const auto& e : m.exprs) best = std::max(best, e.eval(x));
      v += m.coef * best;
    }
    return v;
  }
};

struct LoweredModel {
  LinearProgram lp;
  int n_model_vars = 0;  // lp variables [0, n_model_vars) mirror the PwlModel variables
};

// Epigraph lowering. Each |a| term gets s >= a, s >= -a (s >= 0 since
// |a| >= 0); each max term gets one variable dominating every list entry.
// Pure-constant max entries tighten the epigraph variable's lower bound
// instead of emitting rows.
inline LoweredModel lower(const PwlModel& model) {
  LoweredModel out;
  LinearProgram& lp = out.lp;
  out.n_model_vars = model.n_vars();
  lp.lo = model.lo;
  lp.hi = model.hi;
  lp.cost.assign(model.lo.size(), 0.0);
  lp.n = model.n_vars();
  lp.cost_offset = model.linear_cost.constant;
  for (const auto& t : model.linear_cost.terms) lp.cost[static_cast<size_t>(t.var)] += t.coef;
  for (const auto& c : model.constraints) lp.add_row(c.expr, c.sense, c.rhs);

  for (const auto& a : model.abs_terms) {
    if (!(a.coef >= 0.0)) throw ConfigError("lower: |.| cost coefficient must be >= 0");
    if (a.expr.terms.empty()) {
      lp.cost_offset += a.coef * std::abs(a.expr.constant);
      continue;
    }
    int s = lp.add_var(0.0, kInf);
    lp.cost[static_cast<size_t>(s)] = a.coef;
    LinExpr below = a.expr;  // a - s <= 0
    below.add(s, -1.0);
    lp.add_row(below, RowSense::le, 0.0);
    LinExpr above;  // -a - s <= 0
    above.constant = -a.expr.constant;
    for (const auto& t : a.expr.terms) above.add(t.var, -t.coef);
    above.add(s, -1.0);
    lp.add_row(above, RowSense::le, 0.0);
  }

  for (const auto& m : model.max_terms) {
    if (!(m.coef >= 0.0)) throw ConfigError("lower: max cost coefficient must be >= 0");
    if (m.exprs.empty()) throw ConfigError("lower: max cost needs a nonempty list");
    double const_floor = -kInf;
    bool has_affine = false;
    for (const auto& e : m.exprs) {
      if (e.terms.empty()) {
        const_floor = std::max(const_floor, e.constant);
      } else {
        has_affine = true;
      }
    }
    if (!has_affine) {
      lp.cost_offset += m.coef * const_floor;
      continue;
    }
    int v = lp.add_var(const_floor, kInf);
    lp.cost[static_cast<size_t>(v)] = m.coef;
    for (const auto& e : m.exprs) {
      if (e.terms.empty()) continue;
      LinExpr row = e;  // e - v <= 0
      row.add(v, -1.0);
      lp.add_row(row, RowSense::le, 0.0);
    }
  }
  return out;
}

}  // namespace empc
