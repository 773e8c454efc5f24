#pragma once

// Receding-horizon battery dispatch controllers. Two families are
// provided: a traditional economic MPC that minimizes energy plus
// monthly demand charges over its prediction window directly, and a
// reference-guided MPC that first solves a reference program over a
// (possibly longer) reference window, extracts the reference demand
// peaks, and then solves a prediction-window program whose terminal
// cost and terminal state pin come from that reference. Every
// subproblem lowers to a linear program.
//
// Conventions: u2 > 0 discharges the battery, u1 is grid import
// (negative = export), and the load balance L = PV + u1 + u2 holds
// exactly at every step of every returned plan.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "empc/errors.hpp"
#include "empc/pwl.hpp"
#include "empc/series.hpp"
#include "empc/simplex.hpp"
#include "empc/tariff.hpp"
#include "empc/timegrid.hpp"

namespace empc {

// Demand-charge peak tracking: `wt` seeds the optimization's max terms
// with the month's already-observed peaks; `nt` uses zero thresholds.
enum class Tracking { nt, wt };

enum class Variant {
  trad,       // traditional economic MPC, no reference stage
  proposed,   // reference-guided MPC (reference + prediction stages)
  empc_star,  // proposed variant with a full-month reference window
};

inline const char* to_string(Tracking t) { return t == Tracking::nt ? "nt" : "wt"; }
inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::trad: return "trad";
    case Variant::proposed: return "proposed";
    case Variant::empc_star: return "empc_star";
  }
  return "?";
}

// Solved dispatch trajectory over one window. u1/u2 have window length;
// x has one extra trailing entry (the post-window state).
struct DispatchPlan {
  HorizonWindow window;
  std::vector<double> u1;
  std::vector<double> u2;
  std::vector<double> x;
  double objective = 0.0;
  long iterations = 0;
  long iterations_phase1 = 0;
};

// Reference trajectory: the reference-stage solution re-labeled, with
// the origin step it was computed at.
struct ReferenceTrajectory {
  long long origin = 0;
  HorizonWindow window;
  std::vector<double> x_r;   // window length + 1
  std::vector<double> u_r1;  // window length
  std::vector<double> u_r2;  // window length
  double objective = 0.0;
  long iterations = 0;
};

// Peaks extracted from a reference trajectory for a target step k:
// y_hat_* is the best peak the reference commits to for k's preceding
// billing period (never below the observed month peak); y_check_* is
// the peak the reference still plans at or after k within k's period
// (a floor below which the MPC has no incentive to push).
struct ReferencePeaks {
  long long k = 0;
  long long origin = 0;
  double y_hat_nc = 0.0;
  double y_check_nc = 0.0;
  double y_hat_op = 0.0;
  double y_check_op = 0.0;
};

// Augmented state carried by the prediction-stage program: SOC plus the
// two running demand peaks.
struct AugmentedState {
  double x = 0.0;
  double y_nc = 0.0;
  double y_op = 0.0;
};

// Literal one-step recursion of the augmented state: the carry is
// dropped when k opens a billing period, while u1(k) always enters the
// non-coincident peak and enters the on-peak one only during the
// on-peak window. Billing at a period-opening step k therefore reads
// the pre-reset carry in y(k) before this transition discards it.
inline AugmentedState augmented_step(const AugmentedState& z, double u1_kw, double u2_kw,
                                     long long k, const TimeGrid& g, const BessParams& bess) {
  double keep = sigma(g, k) ? 0.0 : 1.0;
  AugmentedState next;
  next.x = z.x - u2_kw * g.step_hours() / bess.energy_kwh;
  next.y_nc = std::max(keep * z.y_nc, u1_kw);
  next.y_op = std::max(keep * z.y_op, is_op_period(g, k) ? u1_kw : 0.0);
  return next;
}

namespace detail {

// Shared skeleton of every dispatch program: charge/discharge split
// variables, the SOC chain, and the energy + conversion-loss cost with
// the load-balance substitution folded into coefficients and offsets.
struct DispatchBuilder {
  PwlModel model;
  std::vector<int> vd;  // discharge power per window step, [0, power_kw]
  std::vector<int> vc;  // charge power per window step, [0, power_kw]
  std::vector<int> vx;  // SOC at window.start .. window.end + 1
  const ForecastSlice* forecast = nullptr;
  HorizonWindow window;

  DispatchBuilder(double x_t, const ForecastSlice& f, const HorizonWindow& w,
                  const TariffSchedule& tariff, const BessParams& bess, const TimeGrid& g)
      : forecast(&f), window(w) {
    if (f.window.start != w.start || f.window.end != w.end) {
      throw ConfigError("dispatch program: forecast window does not match");
    }
    auto len = static_cast<size_t>(w.length());
    if (f.load_kw.size() != len || f.pv_kw.size() != len) {
      throw ConfigError("dispatch program: forecast series length mismatch");
    }
    double dt = g.step_hours();
    double ec = tariff.r_ec * dt;
    double loss = ec * 0.5 * (1.0 - bess.eta);
    vd.reserve(len);
    vc.reserve(len);
    vx.reserve(len + 1);
    for (size_t i = 0; i < len; ++i) vd.push_back(model.add_var(0.0, bess.power_kw));
    for (size_t i = 0; i < len; ++i) vc.push_back(model.add_var(0.0, bess.power_kw));
    vx.push_back(model.add_var(x_t, x_t));
    for (size_t i = 1; i <= len; ++i) vx.push_back(model.add_var(bess.soc_min, bess.soc_max));
    double soc_per_kw = dt / bess.energy_kwh;
    LinExpr cost;
    for (size_t i = 0; i < len; ++i) {
      // u1(i) = net(i) - d(i) + c(i); energy cost ec*u1 + loss*(d + c).
      cost.add(vd[i], -ec + loss);
      cost.add(vc[i], ec + loss);
      cost.add(ec * f.net_kw(static_cast<long long>(i)));
      LinExpr dyn;  // x(i+1) = x(i) - (d - c) * dt / E
      dyn.add(vx[i + 1], 1.0).add(vx[i], -1.0).add(vd[i], soc_per_kw).add(vc[i], -soc_per_kw);
      model.add_eq(std::move(dyn), 0.0);
    }
    model.add_linear_cost(cost);
  }

  LinExpr u1_expr(long long i) const {
    LinExpr e;
    e.add(vd[static_cast<size_t>(i)], -1.0).add(vc[static_cast<size_t>(i)], 1.0);
    e.add(forecast->net_kw(i));
    return e;
  }

  // coef * max over u1 of window steps [seg_start, seg_end] (absolute
  // step indices; on-peak subset only when op_only) together with
  // constant floor entries. Pure-constant results fold into the offset.
  void add_peak_cost(double coef, long long seg_start, long long seg_end, bool op_only,
                     std::initializer_list<double> floors, const TimeGrid& g) {
    if (coef == 0.0) return;
    std::vector<LinExpr> entries;
    for (long long k = seg_start; k <= seg_end; ++k) {
      if (op_only && !is_op_period(g, k)) continue;
      entries.push_back(u1_expr(k - window.start));
    }
    for (double fl : floors) entries.push_back(LinExpr(fl));
    model.add_max_cost(coef, std::move(entries));
  }

  // Lower-bounds one SOC variable (absolute step index into
  // window.start .. window.end + 1).
  void require_soc_at_least(long long step, double value) {
    auto idx = static_cast<size_t>(step - window.start);
    double lo = std::max(model.lo[static_cast<size_t>(vx[idx])], value);
    if (lo > model.hi[static_cast<size_t>(vx[idx])]) {
      throw SolverError("dispatch program infeasible: SOC floor " + std::to_string(value) +
                        " exceeds the SOC ceiling");
    }
    model.lo[static_cast<size_t>(vx[idx])] = lo;
  }

  void pin_soc(long long step, double value, const BessParams& bess) {
    auto idx = static_cast<size_t>(step - window.start);
    double v = std::clamp(value, bess.soc_min, bess.soc_max);
    model.lo[static_cast<size_t>(vx[idx])] = v;
    model.hi[static_cast<size_t>(vx[idx])] = v;
  }

  DispatchPlan solve(const char* what) const {
    LoweredModel low = lower(model);
    LpSolution sol = solve_lp(low.lp);
    if (sol.status != LpStatus::optimal) {
      throw SolverError(std::string(what) + ": subproblem " + to_string(sol.status) +
                        (sol.detail.empty() ? "" : " (" + sol.detail + ")"));
    }
    DispatchPlan plan;
    plan.window = window;
    auto len = static_cast<size_t>(window.length());
    plan.u1.resize(len);
    plan.u2.resize(len);
    plan.x.resize(len + 1);
    for (size_t i = 0; i < len; ++i) {
      double d = sol.x[static_cast<size_t>(vd[i])];
      double c = sol.x[static_cast<size_t>(vc[i])];
      plan.u2[i] = d - c;
      plan.u1[i] = forecast->net_kw(static_cast<long long>(i)) - plan.u2[i];
    }
    for (size_t i = 0; i <= len; ++i) plan.x[i] = sol.x[static_cast<size_t>(vx[i])];
    plan.objective = sol.objective;
    plan.iterations = sol.iterations;
    plan.iterations_phase1 = sol.iterations_phase1;
    return plan;
  }
};

}  // namespace detail

namespace detail {

inline DispatchBuilder make_trad_builder(long long t, double x_t, const ForecastSlice& forecast,
                                         const HorizonWindow& window,
                                         const PeakState& peak_state, Tracking tracking,
                                         const TariffSchedule& tariff, const BessParams& bess,
                                         const TimeGrid& g) {
  if (window.start != t) throw ConfigError("dispatch program: window must start at t");
  DispatchBuilder b(x_t, forecast, window, tariff, bess, g);
  double thr_nc = tracking == Tracking::wt ? peak_state.nc_kw : 0.0;
  double thr_op = tracking == Tracking::wt ? peak_state.op_kw : 0.0;
  long long in_month_end = std::min(window.end, month_end_step(g, g.month_of(t)));
  b.add_peak_cost(tariff.r_nc, t, in_month_end, false, {thr_nc}, g);
  b.add_peak_cost(tariff.r_op, t, in_month_end, true, {thr_op}, g);
  if (window.threshold_step <= window.end + 1) {
    // A rolling window opening late in the evening can place its
    // threshold midnight a single step ahead, where the 50% floor may
    // be unreachable from a legitimately low state (the closed loop is
    // free to drain the battery into an evening peak). Capping the
    // floor at the max-rate charging envelope keeps the program
    // feasible and recovers the threshold as fast as the battery
    // allows; the cap is inactive whenever 50% is attainable in time.
    double soc_per_step = bess.power_kw * g.step_hours() / bess.energy_kwh;
    double reachable =
        x_t + soc_per_step * static_cast<double>(window.threshold_step - t);
    b.require_soc_at_least(window.threshold_step, std::min(0.5, reachable));
  }
  return b;
}

}  // namespace detail

// Traditional economic MPC subproblem: minimize energy cost plus the
// current month's demand charges over the window, with the 50%-SOC
// floor at the window's threshold step. Steps of a following month
// inside the window carry energy cost only. `wt` bills each peak
// against the larger of the planned in-month peak and the observed
// threshold; `nt` uses zero thresholds.
inline DispatchPlan trad_empc_plan(long long t, double x_t, const ForecastSlice& forecast,
                                   const HorizonWindow& window, const PeakState& peak_state,
                                   Tracking tracking, const TariffSchedule& tariff,
                                   const BessParams& bess, const TimeGrid& g) {
  return detail::make_trad_builder(t, x_t, forecast, window, peak_state, tracking, tariff, bess,
                                   g)
      .solve("trad dispatch");
}

// The same program assembled but not solved (for inspection).
inline PwlModel trad_empc_program(long long t, double x_t, const ForecastSlice& forecast,
                                  const HorizonWindow& window, const PeakState& peak_state,
                                  Tracking tracking, const TariffSchedule& tariff,
                                  const BessParams& bess, const TimeGrid& g) {
  return std::move(detail::make_trad_builder(t, x_t, forecast, window, peak_state, tracking,
                                             tariff, bess, g)
                       .model);
}

// Reference-stage program: identical structure to the traditional
// subproblem, solved over the reference window (which may span the
// whole remaining month), re-labeled as a trajectory to track.
inline ReferenceTrajectory build_reference(long long t, double x_t, const ForecastSlice& forecast,
                                           const HorizonWindow& ref_win,
                                           const PeakState& peak_state, Tracking tracking,
                                           const TariffSchedule& tariff, const BessParams& bess,
                                           const TimeGrid& g) {
  DispatchPlan plan = trad_empc_plan(t, x_t, forecast, ref_win, peak_state, tracking, tariff,
                                     bess, g);
  ReferenceTrajectory ref;
  ref.origin = t;
  ref.window = ref_win;
  ref.x_r = std::move(plan.x);
  ref.u_r1 = std::move(plan.u1);
  ref.u_r2 = std::move(plan.u2);
  ref.objective = plan.objective;
  ref.iterations = plan.iterations;
  return ref;
}

namespace detail {

// Max of the reference import over window steps of `month`, clipped to
// [from, to] and optionally to the on-peak subset. Returns the floor
// argument when the set is empty.
inline double ref_peak_over(const ReferenceTrajectory& ref, int month, long long from,
                            long long to, bool op_only, double empty_value, const TimeGrid& g) {
  from = std::max(from, ref.window.start);
  to = std::min(to, ref.window.end);
  bool any = false;
  double best = 0.0;
  for (long long k = from; k <= to; ++k) {
    if (g.month_of(k) != month) continue;
    if (op_only && !is_op_period(g, k)) continue;
    double v = ref.u_r1[static_cast<size_t>(k - ref.window.start)];
    if (!any || v > best) best = v;
    any = true;
  }
  return any ? best : empty_value;
}

}  // namespace detail

// Extracts the reference peaks for target step k from a reference
// trajectory computed at `ref.origin`. y_hat looks backward: the
// reference import peak over k-1's billing month inside the reference
// window, never below the observed peak at the origin. y_check looks
// forward: the reference import peak at or after k within k's month,
// zero when k itself opens a billing period. On-peak variants restrict
// to on-peak steps, with empty sets mapping to zero. At k one past the
// reference window (equal reference and prediction spans) the forward
// values cannot be formed, so the values at k-1 are reused.
inline ReferencePeaks reference_peaks(long long k, const ReferenceTrajectory& ref,
                                      const PeakState& peak_state_at_origin, const TimeGrid& g) {
  if (k < ref.origin || k > ref.window.end + 1) {
    throw ConfigError("reference peaks: target step outside the reference window");
  }
  ReferencePeaks out;
  out.k = k;
  out.origin = ref.origin;

  if (k == 0) {
    // No preceding billing period exists; only the observed peaks apply.
    out.y_hat_nc = peak_state_at_origin.nc_kw;
    out.y_hat_op = peak_state_at_origin.op_kw;
  } else {
    int back_month = g.month_of(k - 1);
    out.y_hat_nc = std::max(peak_state_at_origin.nc_kw,
                            detail::ref_peak_over(ref, back_month, ref.origin, k - 1, false,
                                                  peak_state_at_origin.nc_kw, g));
    out.y_hat_op = std::max(peak_state_at_origin.op_kw,
                            detail::ref_peak_over(ref, back_month, ref.origin, k - 1, true,
                                                  peak_state_at_origin.op_kw, g));
  }

  long long fwd = k;
  if (fwd > ref.window.end) fwd = k - 1;  // reuse the last in-window values
  if (sigma(g, fwd) || fwd < ref.origin) {
    out.y_check_nc = 0.0;
    out.y_check_op = 0.0;
  } else {
    int fwd_month = g.month_of(fwd);
    out.y_check_nc =
        detail::ref_peak_over(ref, fwd_month, fwd, ref.window.end, false, 0.0, g);
    out.y_check_op = detail::ref_peak_over(ref, fwd_month, fwd, ref.window.end, true, 0.0, g);
  }
  return out;
}

namespace detail {

inline DispatchBuilder make_proposed_builder(long long t, double x_t,
                                             const PeakState& peak_state,
                                             const ReferenceTrajectory& ref,
                                             const ForecastSlice& forecast,
                                             const HorizonWindow& window,
                                             const TariffSchedule& tariff,
                                             const BessParams& bess, const TimeGrid& g) {
  if (window.start != t) throw ConfigError("dispatch program: window must start at t");
  if (ref.origin != t) {
    throw ConfigError("reference-guided dispatch: reference origin must match t");
  }
  if (ref.window.end + 1 < window.end + 1) {
    throw ConfigError("reference-guided dispatch: reference must cover the terminal step");
  }
  detail::DispatchBuilder b(x_t, forecast, window, tariff, bess, g);

  // When t itself opens a billing period, the stage cost at t bills the
  // observed peaks — a constant, kept so the objective equals the
  // literal stage-cost sum.
  if (sigma(g, t)) {
    b.model.add_linear_cost(
        LinExpr(tariff.r_nc * peak_state.nc_kw + tariff.r_op * peak_state.op_kw));
  }

  // Billing openings strictly inside (t, end]: each bills the peak
  // carried from the previous segment.
  long long seg_start = t;
  bool first_segment = true;
  for (long long k = t + 1; k <= window.end; ++k) {
    if (!sigma(g, k)) continue;
    double carry_nc = first_segment ? peak_state.nc_kw : 0.0;
    double carry_op = first_segment ? peak_state.op_kw : 0.0;
    b.add_peak_cost(tariff.r_nc, seg_start, k - 1, false, {carry_nc, 0.0}, g);
    b.add_peak_cost(tariff.r_op, seg_start, k - 1, true, {carry_op, 0.0}, g);
    seg_start = k;
    first_segment = false;
  }

  ReferencePeaks peaks = reference_peaks(window.end + 1, ref, peak_state, g);
  double carry_nc = first_segment ? peak_state.nc_kw : 0.0;
  double carry_op = first_segment ? peak_state.op_kw : 0.0;
  b.add_peak_cost(tariff.r_nc, seg_start, window.end, false,
                  {carry_nc, peaks.y_check_nc, 0.0}, g);
  b.add_peak_cost(tariff.r_op, seg_start, window.end, true, {carry_op, peaks.y_check_op, 0.0},
                  g);
  b.model.add_linear_cost(
      LinExpr(-tariff.r_nc * peaks.y_hat_nc - tariff.r_op * peaks.y_hat_op));

  b.pin_soc(window.end + 1,
            ref.x_r[static_cast<size_t>(window.end + 1 - ref.window.start)], bess);
  return b;
}

}  // namespace detail

// Reference-guided MPC subproblem. The objective carries the energy
// cost, bills the running demand peaks at every billing-period opening
// inside the window (the peak accumulated since the previous opening,
// seeded with the observed peaks), and closes with a terminal term
// max(terminal peak, reference forward peak) - reference backward peak
// per charge type. The terminal SOC is pinned to the reference
// trajectory; no explicit 50%-SOC floor appears here.
inline DispatchPlan proposed_empc_plan(long long t, double x_t, const PeakState& peak_state,
                                       const ReferenceTrajectory& ref,
                                       const ForecastSlice& forecast,
                                       const HorizonWindow& window, const TariffSchedule& tariff,
                                       const BessParams& bess, const TimeGrid& g) {
  return detail::make_proposed_builder(t, x_t, peak_state, ref, forecast, window, tariff, bess,
                                       g)
      .solve("reference-guided dispatch");
}

// The same program assembled but not solved (for inspection).
inline PwlModel proposed_empc_program(long long t, double x_t, const PeakState& peak_state,
                                      const ReferenceTrajectory& ref,
                                      const ForecastSlice& forecast,
                                      const HorizonWindow& window, const TariffSchedule& tariff,
                                      const BessParams& bess, const TimeGrid& g) {
  return std::move(detail::make_proposed_builder(t, x_t, peak_state, ref, forecast, window,
                                                 tariff, bess, g)
                       .model);
}

struct ControllerConfig {
  Variant variant = Variant::trad;
  Tracking tracking = Tracking::wt;
  HorizonSpec mpc;  // prediction window rule
  HorizonSpec ref;  // reference window rule (ignored for trad)
};

// One executed control step together with its audit trail.
struct Decision {
  double u1 = 0.0;
  double u2 = 0.0;
  DispatchPlan plan;
  std::optional<ReferenceTrajectory> ref;
  std::optional<ReferencePeaks> peaks;
  long lp_iterations = 0;  // both stages
};

// Single-step dispatch policy. Pure: every step is a function of
// (t, SOC, peak state, data); all persistent state lives in the caller.
class Controller {
 public:
  Controller(const ControllerConfig& cfg, const TariffSchedule& tariff, const BessParams& bess,
             const TimeGrid& grid)
      : cfg_(cfg), tariff_(tariff), bess_(bess), g_(grid) {
    validate(tariff_);
    validate(bess_);
    if (cfg_.mpc.mode == HorizonMode::full_month) {
      throw ConfigError("controller: prediction horizon cannot be full_month");
    }
    validate_horizon_spec(g_, cfg_.mpc);
    switch (cfg_.variant) {
      case Variant::trad:
        break;
      case Variant::proposed:
        if (cfg_.ref.mode == HorizonMode::full_month) {
          throw ConfigError(
              "controller: full_month reference requires the empc_star variant");
        }
        validate_horizon_spec(g_, cfg_.ref);
        if (cfg_.ref.mode != cfg_.mpc.mode) {
          throw ConfigError("controller: reference and prediction horizons must share a mode");
        }
        if (cfg_.ref.nominal_length_steps < cfg_.mpc.nominal_length_steps) {
          throw ConfigError(
              "controller: reference horizon shorter than the prediction horizon");
        }
        break;
      case Variant::empc_star:
        if (cfg_.ref.mode != HorizonMode::full_month) {
          throw ConfigError("controller: empc_star requires a full_month reference");
        }
        if (cfg_.mpc.mode != HorizonMode::shrinking ||
            cfg_.mpc.nominal_length_steps != g_.steps_per_day) {
          throw ConfigError(
              "controller: empc_star requires a one-day shrinking prediction horizon");
        }
        break;
    }
  }

  const ControllerConfig& config() const { return cfg_; }

  Decision step(long long t, double x_t, const PeakState& peak_state,
                const SeriesView& data) const {
    Decision d;
    HorizonWindow w = mpc_window(g_, cfg_.mpc, t);
    if (cfg_.variant == Variant::trad) {
      d.plan = trad_empc_plan(t, x_t, data.slice(w), w, peak_state, cfg_.tracking, tariff_,
                              bess_, g_);
    } else {
      HorizonWindow rw = ref_window(g_, cfg_.ref, t);
      ReferenceTrajectory ref = build_reference(t, x_t, data.slice(rw), rw, peak_state,
                                                cfg_.tracking, tariff_, bess_, g_);
      d.peaks = reference_peaks(w.end + 1, ref, peak_state, g_);
      d.plan = proposed_empc_plan(t, x_t, peak_state, ref, data.slice(w), w, tariff_, bess_, g_);
      d.lp_iterations += ref.iterations;
      d.ref = std::move(ref);
    }
    d.lp_iterations += d.plan.iterations;
    d.u1 = d.plan.u1.front();
    d.u2 = d.plan.u2.front();
    return d;
  }

 private:
  ControllerConfig cfg_;
  TariffSchedule tariff_;
  BessParams bess_;
  TimeGrid g_;
};

inline Controller make_controller(const ControllerConfig& cfg, const TariffSchedule& tariff,
                                  const BessParams& bess, const TimeGrid& grid) {
  return Controller(cfg, tariff, bess, grid);
}

}  // namespace empc
