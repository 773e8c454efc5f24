#pragma once

// Closed-loop harness: per step, observe (SOC, observed month peaks),
// run the controller, apply the first action to the plant, fold the
// observed peaks forward, and record the step. Monthly settlement bills
// each month's realized import peaks at full demand rates plus the
// metered energy and conversion-loss cost.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "empc/controllers.hpp"
#include "empc/errors.hpp"
#include "empc/tariff.hpp"
#include "empc/timegrid.hpp"

namespace empc {

// One simulated scenario: the controller to run, the plant and tariff
// it runs against, the calendar span, and where its data lives. The
// path/name fields are carried for the I/O layer; the loop itself only
// reads the numeric ones.
struct ScenarioConfig {
  std::string name = "scenario";
  ControllerConfig controller;
  TariffSchedule tariff;
  BessParams bess;
  std::string start_date = "2019-01-01";
  int n_days = 365;
  int step_minutes = 15;
  PeakState initial_peaks;  // month peaks already on the books at start
  std::string series_path;  // empty = caller supplies the series directly
  std::string out_dir;
};

inline TimeGrid make_scenario_grid(const ScenarioConfig& cfg) {
  return build_grid(parse_date(cfg.start_date), cfg.n_days, cfg.step_minutes);
}

// SOC propagation of the executed action. Results within `tol` of the
// SOC limits are clamped (and flagged via `clamped`); anything further
// out means the controller returned an inconsistent action.
inline double plant_step(double x, double u2_kw, const BessParams& bess, double dt_hours,
                         bool* clamped = nullptr, double tol = 1e-6) {
  if (std::abs(u2_kw) > bess.power_kw + tol) {
    throw SolverError("plant step: |u2| = " + std::to_string(std::abs(u2_kw)) +
                      " kW exceeds the power limit");
  }
  double next = x - u2_kw * dt_hours / bess.energy_kwh;
  if (next < bess.soc_min - tol || next > bess.soc_max + tol) {
    throw SolverError("plant step: SOC " + std::to_string(next) + " outside [" +
                      std::to_string(bess.soc_min) + ", " + std::to_string(bess.soc_max) + "]");
  }
  double clipped = std::clamp(next, bess.soc_min, bess.soc_max);
  if (clamped) *clamped = clipped != next;
  return clipped;
}

// One executed step as persisted to the trace.
struct StepRecord {
  long long t = 0;
  double u1_kw = 0.0;
  double u2_kw = 0.0;
  double x_next = 0.0;          // SOC after applying u2
  PeakState peak_state_after;   // observed peaks after folding u1(t)
  double solve_time_s = 0.0;
  bool month_cross = false;     // prediction window reaches into the next month
  bool clamped = false;         // SOC clipped onto its bounds within tolerance
  long lp_iterations = 0;
};

struct MonthCost {
  int month = 0;        // 0-based within the simulated span
  std::string label;    // "YYYY-MM"
  double ncdc = 0.0;
  double opdc = 0.0;
  double energy_cost = 0.0;
  double bess_loss = 0.0;
  double peak_nc_kw = 0.0;  // billed peaks (realized, floored by any carry)
  double peak_op_kw = 0.0;
  bool partial = false;  // month clipped by the simulation span or trace end

  double total() const { return ncdc + opdc + energy_cost + bess_loss; }
};

struct CostReport {
  std::vector<MonthCost> months;
  double ncdc = 0.0;
  double opdc = 0.0;
  double energy_cost = 0.0;
  double bess_loss = 0.0;
  double annual_cost = 0.0;  // ncdc + opdc + energy_cost + bess_loss
  long long n_steps = 0;
  double total_solve_time_s = 0.0;
  double max_solve_time_s = 0.0;
};

// Bills every (possibly partial) month covered by the trace: demand
// charges on the month's realized import peaks — floored by the
// initial carry for the first month — plus energy and loss costs
// accumulated in step order.
inline CostReport settle_costs(const std::vector<StepRecord>& trace, const TimeGrid& g,
                               const TariffSchedule& tariff, const BessParams& bess,
                               const PeakState& initial_peaks = PeakState{}) {
  if (trace.size() > static_cast<size_t>(g.n_steps)) {
    throw DataError("settle: trace longer than the time grid");
  }
  CostReport rep;
  rep.n_steps = static_cast<long long>(trace.size());
  std::vector<double> u1(trace.size());
  for (size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].t != static_cast<long long>(i)) {
      throw DataError("settle: trace steps must be contiguous from 0");
    }
    u1[i] = trace[i].u1_kw;
  }
  double dt = g.step_hours();
  for (int m = 0; m < g.n_months; ++m) {
    long long lo = month_start_step(g, m);
    if (lo >= rep.n_steps) break;
    long long hi = std::min(month_end_step(g, m), rep.n_steps - 1);
    MonthCost mc;
    mc.month = m;
    CivilDate d = g.date_of_day(g.day_of(lo));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", d.year, d.month);
    mc.label = buf;
    mc.partial = month_is_partial(g, m) || hi < month_end_step(g, m);

    WindowPeaks peaks =
        window_peaks(std::span<const double>(u1).subspan(static_cast<size_t>(lo),
                                                         static_cast<size_t>(hi - lo + 1)),
                     g, lo, hi);
    double carry_nc = m == 0 ? initial_peaks.nc_kw : 0.0;
    double carry_op = m == 0 ? initial_peaks.op_kw : 0.0;
    mc.peak_nc_kw = std::max(peaks.nc_kw, carry_nc);
    mc.peak_op_kw = std::max(peaks.op_kw, carry_op);
    mc.ncdc = tariff.r_nc * mc.peak_nc_kw;
    mc.opdc = tariff.r_op * mc.peak_op_kw;
    for (long long t = lo; t <= hi; ++t) {
      StepCost c = energy_cost_step(trace[static_cast<size_t>(t)].u1_kw,
                                    trace[static_cast<size_t>(t)].u2_kw, tariff, bess, dt);
      mc.energy_cost += c.grid;
      mc.bess_loss += c.loss;
    }
    rep.months.push_back(std::move(mc));
  }
  for (const MonthCost& mc : rep.months) {
    rep.ncdc += mc.ncdc;
    rep.opdc += mc.opdc;
    rep.energy_cost += mc.energy_cost;
    rep.bess_loss += mc.bess_loss;
  }
  rep.annual_cost = rep.ncdc + rep.opdc + rep.energy_cost + rep.bess_loss;
  for (const StepRecord& r : trace) {
    rep.total_solve_time_s += r.solve_time_s;
    rep.max_solve_time_s = std::max(rep.max_solve_time_s, r.solve_time_s);
  }
  return rep;
}

struct SimResult {
  TimeGrid grid;
  std::vector<StepRecord> trace;
  CostReport report;
};

// Called after every executed step with the full controller decision
// (plans and reference, transient) and the persisted record.
using StepObserver = std::function<void(const Decision&, const StepRecord&)>;

// Runs the scenario over its whole grid against the given series
// (perfect forecasts are slices of the same series). A solver failure
// aborts the run; the offending step and timestamp are reported in the
// error.
inline SimResult run_closed_loop(const ScenarioConfig& cfg, const SeriesView& data,
                                 const StepObserver& observer = {}) {
  TimeGrid g = make_scenario_grid(cfg);
  validate(cfg.tariff);
  validate(cfg.bess);
  if (data.load_kw.size() != static_cast<size_t>(g.n_steps) ||
      data.pv_kw.size() != static_cast<size_t>(g.n_steps)) {
    throw DataError("closed loop: series length " + std::to_string(data.load_kw.size()) +
                    " does not cover the " + std::to_string(g.n_steps) + "-step grid");
  }
  Controller ctrl = make_controller(cfg.controller, cfg.tariff, cfg.bess, g);

  double x = cfg.bess.soc_init;
  PeakState peaks = cfg.initial_peaks;
  std::vector<StepRecord> trace;
  trace.reserve(static_cast<size_t>(g.n_steps));

  for (long long t = 0; t < g.n_steps; ++t) {
    auto tick = std::chrono::steady_clock::now();
    Decision d;
    try {
      d = ctrl.step(t, x, peaks, data);
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(t) + " (" + g.timestamp(t) +
                        "): " + e.what());
    }
    auto tock = std::chrono::steady_clock::now();

    StepRecord r;
    r.t = t;
    r.u1_kw = d.u1;
    r.u2_kw = d.u2;
    r.x_next = plant_step(x, d.u2, cfg.bess, g.step_hours(), &r.clamped);
    x = r.x_next;
    peaks = update_peak_state(peaks, d.u1, t, g);
    r.peak_state_after = peaks;
    r.solve_time_s = std::chrono::duration<double>(tock - tick).count();
    r.month_cross = g.month_of(t) != g.month_of(d.plan.window.end + 1);
    r.lp_iterations = d.lp_iterations;
    if (observer) observer(d, r);
    trace.push_back(r);
  }

  SimResult res;
  res.grid = g;
  res.report = settle_costs(trace, g, cfg.tariff, cfg.bess, cfg.initial_peaks);
  res.trace = std::move(trace);
  return res;
}

}  // namespace empc
