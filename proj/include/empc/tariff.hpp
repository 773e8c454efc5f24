#pragma once

// Tariff arithmetic: per-step energy and conversion-loss cost, monthly
// demand-charge peaks (non-coincident and on-peak), the running peak
// state carried across a month, and demand-charge settlement.

#include <algorithm>
#include <cmath>
#include <span>

#include "empc/errors.hpp"
#include "empc/timegrid.hpp"

namespace empc {

struct TariffSchedule {
  double r_ec = 0.0;  // energy charge, $/kWh
  double r_nc = 0.0;  // non-coincident demand charge, $/kW per month
  double r_op = 0.0;  // on-peak demand charge, $/kW per month
};

inline void validate(const TariffSchedule& t) {
  if (!(t.r_ec >= 0.0) || !(t.r_nc >= 0.0) || !(t.r_op >= 0.0)) {
    throw ConfigError("tariff rates must be nonnegative");
  }
}

struct BessParams {
  double energy_kwh = 0.0;  // usable capacity
  double power_kw = 0.0;    // symmetric charge/discharge limit
  double eta = 1.0;         // round-trip efficiency, (0, 1]
  double soc_min = 0.0;
  double soc_max = 1.0;
  double soc_init = 0.5;
};

inline void validate(const BessParams& b) {
  if (!(b.energy_kwh > 0.0)) throw ConfigError("bess: energy_kwh must be > 0");
  if (!(b.power_kw > 0.0)) throw ConfigError("bess: power_kw must be > 0");
  if (!(b.eta > 0.0 && b.eta <= 1.0)) throw ConfigError("bess: eta must be in (0, 1]");
  if (!(0.0 <= b.soc_min && b.soc_min <= b.soc_init && b.soc_init <= b.soc_max &&
        b.soc_max <= 1.0)) {
    throw ConfigError("bess: need 0 <= soc_min <= soc_init <= soc_max <= 1");
  }
}

// Running billing-period peaks, both nonnegative; reset at month starts.
struct PeakState {
  double nc_kw = 0.0;
  double op_kw = 0.0;
};

struct StepCost {
  double grid = 0.0;  // energy purchased (negative = export revenue)
  double loss = 0.0;  // conversion-loss cost, always >= 0
};

// One-step energy cost: grid energy at the energy rate plus the
// conversion-loss term (1 - eta)/2 * |u2| priced at the same rate.
inline StepCost energy_cost_step(double u1_kw, double u2_kw, const TariffSchedule& tariff,
                                 const BessParams& bess, double dt_hours) {
  StepCost c;
  c.grid = tariff.r_ec * dt_hours * u1_kw;
  c.loss = tariff.r_ec * dt_hours * 0.5 * (1.0 - bess.eta) * std::abs(u2_kw);
  return c;
}

struct WindowPeaks {
  double nc_kw = 0.0;
  double op_kw = 0.0;
};

// Peaks of u1 over steps [t_start, t_end] restricted to t_start's month:
// nc over every in-month step, op over the on-peak subset (0 if that
// subset is empty). u1[i] corresponds to step t_start + i.
inline WindowPeaks window_peaks(std::span<const double> u1_kw, const TimeGrid& g,
                                long long t_start, long long t_end) {
  if (t_start < 0 || t_end < t_start || t_end >= g.n_steps) {
    throw ConfigError("window_peaks: bad step range");
  }
  if (static_cast<long long>(u1_kw.size()) < t_end - t_start + 1) {
    throw ConfigError("window_peaks: u1 shorter than window");
  }
  int month = g.month_of(t_start);
  bool any_nc = false, any_op = false;
  WindowPeaks p;
  for (long long t = t_start; t <= t_end && g.month_of(t) == month; ++t) {
    double v = u1_kw[static_cast<size_t>(t - t_start)];
    if (!any_nc || v > p.nc_kw) p.nc_kw = v;
    any_nc = true;
    if (is_op_period(g, t)) {
      if (!any_op || v > p.op_kw) p.op_kw = v;
      any_op = true;
    }
  }
  if (!any_op) p.op_kw = 0.0;
  return p;
}

// Demand charge for one billing period: each realized peak is billed
// against the larger of itself and an already-committed threshold.
inline double demand_charge_cost(const WindowPeaks& peaks, const PeakState& thresholds,
                                 const TariffSchedule& tariff) {
  return tariff.r_nc * std::max(peaks.nc_kw, thresholds.nc_kw) +
         tariff.r_op * std::max(peaks.op_kw, thresholds.op_kw);
}

// Folds one executed step into the running peak state: peaks absorb
// u1(t) (the on-peak one only during the on-peak window) and reset to
// zero when step t + 1 opens a new billing period.
inline PeakState update_peak_state(const PeakState& p, double u1_kw, long long t,
                                   const TimeGrid& g) {
  double keep = sigma(g, t + 1) ? 0.0 : 1.0;
  PeakState next;
  next.nc_kw = keep * std::max(p.nc_kw, u1_kw);
  next.op_kw = keep * (is_op_period(g, t) ? std::max(p.op_kw, u1_kw) : p.op_kw);
  return next;
}

}  // namespace empc
